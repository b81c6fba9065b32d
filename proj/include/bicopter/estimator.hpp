#pragma once

#include "bicopter/config.hpp"
#include "bicopter/linalg.hpp"

// Adaptation laws. Each returns the instantaneous rate of one estimate; the
// simulation integrates them alongside the plant.

namespace bicopter {

/// Rate of the mass estimate: gamma1 sgn(1/m) e2 . (e1 + f2 + k1 x2).
inline double mass_estimate_rate(const Vec2& e1, const Vec2& e2, const Vec2& x2,
                                 const ControllerConfig& cfg) {
  const Vec2 regressor = e1 + gravity_drift(cfg.gravity) + cfg.k1 * x2;
  return cfg.gamma1 * cfg.sign_inv_mass * dot(e2, regressor);
}

/// Rate of the inertia estimate. Only first components of e4 and of the
/// compensated drift (Sigma + Psi * inv_mass_aux) enter.
inline double inertia_estimate_rate(const Vec2& e4, const Vec2& sigma, const Vec2& psi,
                                    double inv_mass_aux, const ControllerConfig& cfg) {
  const Vec2 drift = sigma + inv_mass_aux * psi;
  return cfg.gamma2 * cfg.sign_inv_inertia * e4.x * drift.x;
}

/// Rate of the 1/m estimate used in the rate command.
inline double inv_mass_estimate_rate(const Vec2& e2, const Vec2& e3, const Vec2& x3,
                                     const EstimatorState& est, const ControllerConfig& cfg) {
  const Vec2 w = e2 + (cfg.k1 * est.mass + cfg.k2 * cfg.sign_inv_mass) * thrust_vector(x3);
  return cfg.alpha1 * dot(e3, w);
}

/// Rate of the auxiliary 1/m estimate: alpha2 * regressor . e4, where the
/// regressor is the Psi vector multiplying 1/m in the e4 dynamics.
inline double inv_mass_aux_estimate_rate(const Vec2& e4, const Vec2& regressor,
                                         const ControllerConfig& cfg) {
  return cfg.alpha2 * dot(regressor, e4);
}

}  // namespace bicopter
