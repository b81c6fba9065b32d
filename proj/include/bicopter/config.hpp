#pragma once

#include <cmath>
#include <stdexcept>

#include "bicopter/model.hpp"

namespace bicopter {

/// Everything the adaptive controller is allowed to know. Inertial parameters
/// enter only through the signs of 1/m and 1/J.
struct ControllerConfig {
  double k1{1.0};
  double k2{5.0};
  double k3{10.0};
  double k4{20.0};

  double gamma1{0.1};  // mass estimate
  double gamma2{0.1};  // inertia estimate
  double alpha1{0.1};  // 1/m estimate used in the rate command
  double alpha2{0.1};  // 1/m estimate used in the control

  double sign_inv_mass{1.0};
  double sign_inv_inertia{1.0};

  double gravity{9.81};
  double eps_f{kDefaultEpsF};

  // Test-only mutation hook: negates the Psi regressor. Must stay false outside
  // mutation-sensitivity checks.
  bool inject_psi_sign_flip{false};

  void validate() const {
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(k1) || !positive(k2) || !positive(k3) || !positive(k4)) {
      throw std::invalid_argument("ControllerConfig: gains k1..k4 must be > 0");
    }
    if (!positive(gamma1) || !positive(gamma2) || !positive(alpha1) || !positive(alpha2)) {
      throw std::invalid_argument("ControllerConfig: adaptation gains must be > 0");
    }
    const auto is_sign = [](double s) { return s == 1.0 || s == -1.0; };
    if (!is_sign(sign_inv_mass) || !is_sign(sign_inv_inertia)) {
      throw std::invalid_argument("ControllerConfig: parameter signs must be +1 or -1");
    }
    if (!(eps_f > 0.0)) throw std::invalid_argument("ControllerConfig: eps_F must be > 0");
    if (!(gravity >= 0.0)) throw std::invalid_argument("ControllerConfig: gravity must be >= 0");
  }
};

/// The four adapted scalars.
struct EstimatorState {
  double mass{0.0};          // estimate of m = 1/theta1
  double inertia{0.0};       // estimate of J = 1/theta2
  double inv_mass{0.0};      // estimate of 1/m used inside the rate command
  double inv_mass_aux{0.0};  // second estimate of 1/m, weights Psi in the control

  friend bool operator==(const EstimatorState&, const EstimatorState&) = default;
};

inline bool is_finite(const EstimatorState& e) {
  return std::isfinite(e.mass) && std::isfinite(e.inertia) && std::isfinite(e.inv_mass) &&
         std::isfinite(e.inv_mass_aux);
}

}  // namespace bicopter
