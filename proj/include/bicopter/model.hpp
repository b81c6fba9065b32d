#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bicopter/linalg.hpp"

namespace bicopter {

/// Default lower bound on |F| below which the thrust Jacobian is treated as singular [N].
inline constexpr double kDefaultEpsF = 1e-6;

/// Thrown whenever the thrust Jacobian would be inverted with |F| below the guard.
class SingularInputMap : public std::runtime_error {
 public:
  SingularInputMap(double thrust, double eps_f)
      : std::runtime_error(describe(thrust, eps_f)), thrust_(thrust), eps_f_(eps_f) {}

  double thrust() const { return thrust_; }
  double eps_f() const { return eps_f_; }

 private:
  static std::string describe(double thrust, double eps_f) {
    std::ostringstream os;
    os << "thrust Jacobian singular: |F| = " << std::fabs(thrust) << " N < eps_F = " << eps_f
       << " N";
    return os.str();
  }

  double thrust_;
  double eps_f_;
};

/// True inertial parameters of the simulated vehicle. Only the plant and the
/// Lyapunov monitor may read these; the controller never does.
struct PhysicalParams {
  double mass{1.0};     // [kg]
  double inertia{0.2};  // [kg m^2]
  double gravity{9.81}; // [m/s^2]

  double inv_mass() const { return 1.0 / mass; }
  double inv_inertia() const { return 1.0 / inertia; }

  void validate() const {
    if (!(mass > 0.0) || !(inertia > 0.0) || !(gravity >= 0.0)) {
      throw std::invalid_argument("PhysicalParams: need mass > 0, inertia > 0, gravity >= 0");
    }
  }
};

/// Dynamically extended planar bicopter state.
///
/// x1 = (r1, r2) position [m], x2 = its rate [m/s], x3 = (F [N], phi [rad]).
/// x4 holds the rates of x3 in the column order of the thrust Jacobian, i.e.
/// x4 = (phi_dot [rad/s], F_dot [N/s]), so that d/dt thrust_vector(x3) equals
/// thrust_jacobian(x3) * x4 and the input map [[0, 1/J], [1, 0]] drives
/// (phi_ddot, F_ddot) from u = (F_ddot, M).
struct PlantState {
  Vec2 x1;
  Vec2 x2;
  Vec2 x3;
  Vec2 x4;

  double thrust() const { return x3.x; }
  double roll() const { return x3.y; }
  double roll_rate() const { return x4.x; }
  double thrust_rate() const { return x4.y; }

  friend bool operator==(const PlantState&, const PlantState&) = default;
};

/// u = (F_ddot [N/s^2], M [N m]).
struct ControlInput {
  Vec2 u;
};

/// Rate of x3 = (F_dot, phi_dot) carried by x4.
constexpr Vec2 x3_rate(const Vec2& x4) { return {x4.y, x4.x}; }

/// Constant gravity drift (0, -g) of the translational dynamics.
constexpr Vec2 gravity_drift(double g) { return {0.0, -g}; }

/// Acceleration direction scaled by thrust: (-sin(phi) F, cos(phi) F).
inline Vec2 thrust_vector(const Vec2& x3) {
  const double f = x3.x;
  const double phi = x3.y;
  return {-std::sin(phi) * f, std::cos(phi) * f};
}

/// Jacobian of thrust_vector; columns ordered (phi, F). det = -F.
inline Mat2 thrust_jacobian(const Vec2& x3) {
  const double f = x3.x;
  const double c = std::cos(x3.y);
  const double s = std::sin(x3.y);
  return {-c * f, -s, -s * f, c};
}

inline void check_thrust(double thrust, double eps_f) {
  if (!(std::fabs(thrust) >= eps_f)) throw SingularInputMap(thrust, eps_f);
}

/// Closed-form inverse of thrust_jacobian. Throws SingularInputMap when |F| < eps_f.
inline Mat2 thrust_jacobian_inverse(const Vec2& x3, double eps_f = kDefaultEpsF) {
  const double f = x3.x;
  check_thrust(f, eps_f);
  const double c = std::cos(x3.y);
  const double s = std::sin(x3.y);
  // adj / det with det = -F
  return {-c / f, -s / f, -s, c};
}

/// Time derivative of thrust_jacobian(x3) when x3 moves at rate (F_dot, phi_dot).
inline Mat2 thrust_jacobian_rate(const Vec2& x3, const Vec2& x3_dot) {
  const double f = x3.x;
  const double c = std::cos(x3.y);
  const double s = std::sin(x3.y);
  const double f_dot = x3_dot.x;
  const double phi_dot = x3_dot.y;
  return {s * phi_dot * f - c * f_dot, -c * phi_dot, -c * phi_dot * f - s * f_dot,
          -s * phi_dot};
}

/// d/dt of the inverse Jacobian: -G^-1 Gdot G^-1.
inline Mat2 thrust_jacobian_inverse_rate(const Vec2& x3, const Vec2& x3_dot,
                                         double eps_f = kDefaultEpsF) {
  const Mat2 inv = thrust_jacobian_inverse(x3, eps_f);
  return -(inv * thrust_jacobian_rate(x3, x3_dot) * inv);
}

/// Input map g4(theta) = [[0, 1/J], [1, 0]].
inline Mat2 input_map(const PhysicalParams& p) { return {0.0, p.inv_inertia(), 1.0, 0.0}; }

/// Right-hand side of the extended plant. The returned PlantState holds rates.
inline PlantState plant_derivative(const PlantState& s, const ControlInput& in,
                                   const PhysicalParams& p) {
  PlantState d;
  d.x1 = s.x2;
  d.x2 = gravity_drift(p.gravity) + p.inv_mass() * thrust_vector(s.x3);
  d.x3 = x3_rate(s.x4);
  d.x4 = input_map(p) * in.u;
  return d;
}

inline bool is_finite(const PlantState& s) {
  return is_finite(s.x1) && is_finite(s.x2) && is_finite(s.x3) && is_finite(s.x4);
}

}  // namespace bicopter
