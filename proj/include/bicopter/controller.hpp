#pragma once

#include <cmath>
#include <utility>

#include "bicopter/config.hpp"
#include "bicopter/estimator.hpp"
#include "bicopter/linalg.hpp"
#include "bicopter/model.hpp"

/// Singularity-free adaptive backstepping controller for the extended planar
/// bicopter.
///
/// The controller is a memoryless function of (plant state, estimates,
/// reference position, config). Error coordinates and virtual commands are
/// built in one upstream-to-downstream pass:
///
///   e1 -> velocity command -> e2 -> mass-rate -> thrust command -> e3
///      -> inv-mass-rate -> rate command -> e4 -> Sigma, Psi -> u
///
/// Adaptation-law right-hand sides that appear inside later commands are
/// evaluated inline at the current state. The reference enters through its
/// position only.
namespace bicopter {

/// Every intermediate of one controller evaluation.
struct ControllerDiagnostics {
  Vec2 e1;
  Vec2 e2;
  Vec2 e3;
  Vec2 e4;
  Vec2 velocity_cmd;  // desired x2
  Vec2 thrust_cmd;    // desired thrust_vector(x3)
  Vec2 rate_cmd;      // desired x4
  Vec2 sigma;
  Vec2 psi;
  Vec2 phi;           // e1 + k1 x2 + f2
  Vec2 rate_bracket;  // B, with thrust_jacobian * rate_cmd = -B
  double mass_rate{0.0};
  double inv_mass_rate{0.0};
};

inline Vec2 tracking_error(const Vec2& x1, const Vec2& xi1) { return x1 - xi1; }

inline Vec2 velocity_command(const Vec2& e1, const ControllerConfig& cfg) { return -cfg.k1 * e1; }

inline Vec2 phi_term(const Vec2& e1, const Vec2& x2, const ControllerConfig& cfg) {
  return e1 + cfg.k1 * x2 + gravity_drift(cfg.gravity);
}

/// Desired thrust vector: -m_hat (e1 + f2 + k1 x2) - k2 sgn(1/m) e2.
inline Vec2 thrust_command(const Vec2& e1, const Vec2& x2, const EstimatorState& est,
                           const ControllerConfig& cfg) {
  const Vec2 e2 = x2 - velocity_command(e1, cfg);
  return -est.mass * phi_term(e1, x2, cfg) - cfg.k2 * cfg.sign_inv_mass * e2;
}

namespace detail {

/// Shared front half of the pass, up to and including e3 and the inline
/// inv-mass rate. No Jacobian inversion happens here.
struct OuterLoop {
  Vec2 f2, e1, e2, phi, g2, e3, w;
  double mass_rate, inv_mass_rate;
};

inline OuterLoop outer_loop(const PlantState& s, const EstimatorState& est, const Vec2& xi1,
                            const ControllerConfig& cfg) {
  OuterLoop o;
  o.f2 = gravity_drift(cfg.gravity);
  o.e1 = tracking_error(s.x1, xi1);
  o.e2 = s.x2 - velocity_command(o.e1, cfg);
  o.phi = phi_term(o.e1, s.x2, cfg);
  o.mass_rate = mass_estimate_rate(o.e1, o.e2, s.x2, cfg);
  o.g2 = thrust_vector(s.x3);
  o.e3 = o.g2 - thrust_command(o.e1, s.x2, est, cfg);
  o.w = o.e2 + (cfg.k1 * est.mass + cfg.k2 * cfg.sign_inv_mass) * o.g2;
  o.inv_mass_rate = inv_mass_estimate_rate(o.e2, o.e3, s.x3, est, cfg);
  return o;
}

/// B = m_hat_dot Phi + m_hat (x2 + k1 f2) + k2 s1 (f2 + k1 x2) + th1_hat W + k3 e3.
inline Vec2 rate_bracket(const OuterLoop& o, const PlantState& s, const EstimatorState& est,
                         const ControllerConfig& cfg) {
  const double s1 = cfg.sign_inv_mass;
  return o.mass_rate * o.phi + est.mass * (s.x2 + cfg.k1 * o.f2) +
         cfg.k2 * s1 * (o.f2 + cfg.k1 * s.x2) + est.inv_mass * o.w + cfg.k3 * o.e3;
}

}  // namespace detail

/// Polynomial bracket whose negated image under the inverse Jacobian is the
/// rate command.
inline Vec2 rate_command_bracket(const PlantState& s, const EstimatorState& est, const Vec2& xi1,
                                 const ControllerConfig& cfg) {
  const auto o = detail::outer_loop(s, est, xi1, cfg);
  return detail::rate_bracket(o, s, est, cfg);
}

/// Desired x4: -G^-1 B. Throws SingularInputMap when |F| < eps_F.
inline Vec2 rate_command(const PlantState& s, const EstimatorState& est, const Vec2& xi1,
                         const ControllerConfig& cfg) {
  const Mat2 inv = thrust_jacobian_inverse(s.x3, cfg.eps_f);
  return -(inv * rate_command_bracket(s, est, xi1, cfg));
}

/// Full controller pass. Throws SingularInputMap when |F| < eps_F.
inline ControllerDiagnostics evaluate_controller(const PlantState& s, const EstimatorState& est,
                                                 const Vec2& xi1, const ControllerConfig& cfg) {
  const auto o = detail::outer_loop(s, est, xi1, cfg);
  const double k1 = cfg.k1, k2 = cfg.k2, k3 = cfg.k3;
  const double s1 = cfg.sign_inv_mass;

  const Mat2 jac = thrust_jacobian(s.x3);
  const Mat2 inv = thrust_jacobian_inverse(s.x3, cfg.eps_f);
  const Mat2 inv_rate = thrust_jacobian_inverse_rate(s.x3, x3_rate(s.x4), cfg.eps_f);

  ControllerDiagnostics d;
  d.e1 = o.e1;
  d.e2 = o.e2;
  d.e3 = o.e3;
  d.phi = o.phi;
  d.mass_rate = o.mass_rate;
  d.inv_mass_rate = o.inv_mass_rate;
  d.velocity_cmd = velocity_command(o.e1, cfg);
  d.thrust_cmd = o.g2 - o.e3;
  d.rate_bracket = detail::rate_bracket(o, s, est, cfg);
  d.rate_cmd = -(inv * d.rate_bracket);
  d.e4 = s.x4 - d.rate_cmd;

  // d/dt of the bracket split as known + (1/m) * regressor. The known part is
  // complemented with the e3-e4 coupling term J^T e3.
  const Vec2 g2 = o.g2;
  const Vec2 f2 = o.f2;
  const Vec2 x2 = s.x2;
  const Vec2 jac_x4 = jac * s.x4;
  const Vec2 x2_k1f2 = x2 + k1 * f2;
  const Vec2 f2_k1x2 = f2 + k1 * x2;
  const double gain_w = k1 * est.mass + k2 * s1;
  const double mass_accel_known =
      cfg.gamma1 * s1 * (dot(f2_k1x2, o.phi) + dot(o.e2, x2_k1f2));
  const double mass_accel_regressor = cfg.gamma1 * s1 * (dot(g2, o.phi) + k1 * dot(o.e2, g2));

  const Vec2 bracket_rate_known =
      mass_accel_known * o.phi + 2.0 * o.mass_rate * x2_k1f2 + est.mass * f2 +
      k1 * k2 * s1 * f2 + o.inv_mass_rate * o.w +
      est.inv_mass * (f2 + k1 * x2 + k1 * o.mass_rate * g2 + gain_w * jac_x4) +
      k3 * (jac_x4 + o.mass_rate * o.phi + est.mass * x2_k1f2 + k2 * s1 * f2_k1x2);
  const Vec2 bracket_rate_regressor = mass_accel_regressor * o.phi + k1 * o.mass_rate * g2 +
                                      est.mass * g2 + k1 * k2 * s1 * g2 + est.inv_mass * g2 +
                                      k3 * gain_w * g2;

  d.sigma = inv_rate * d.rate_bracket + inv * bracket_rate_known + jac.transposed() * o.e3;
  d.psi = inv * bracket_rate_regressor;
  if (cfg.inject_psi_sign_flip) d.psi = -d.psi;
  return d;
}

/// Sigma: the parameter-free part of the e4 drift.
inline Vec2 sigma_term(const PlantState& s, const EstimatorState& est, const Vec2& xi1,
                       const ControllerConfig& cfg) {
  return evaluate_controller(s, est, xi1, cfg).sigma;
}

/// Psi: the part of the e4 drift proportional to 1/m.
inline Vec2 psi_term(const PlantState& s, const EstimatorState& est, const Vec2& xi1,
                     const ControllerConfig& cfg) {
  return evaluate_controller(s, est, xi1, cfg).psi;
}

/// u = -( [[0,1],[J_hat,0]] (Sigma + Psi th1_aux_hat) + k4 [[0,1],[sgn(1/J),0]] e4 ).
inline ControlInput control_from(const ControllerDiagnostics& d, const EstimatorState& est,
                                 const ControllerConfig& cfg) {
  const Vec2 drift = d.sigma + est.inv_mass_aux * d.psi;
  const Mat2 drift_map{0.0, 1.0, est.inertia, 0.0};
  const Mat2 damping_map{0.0, 1.0, cfg.sign_inv_inertia, 0.0};
  return {-(drift_map * drift + cfg.k4 * (damping_map * d.e4))};
}

inline std::pair<ControlInput, ControllerDiagnostics> compute_control(
    const PlantState& s, const EstimatorState& est, const Vec2& xi1,
    const ControllerConfig& cfg) {
  ControllerDiagnostics d = evaluate_controller(s, est, xi1, cfg);
  const ControlInput u = control_from(d, est, cfg);
  return {u, d};
}

/// All four adaptation rates from one diagnostics snapshot.
inline EstimatorState estimator_rates(const ControllerDiagnostics& d, const EstimatorState& est,
                                      const ControllerConfig& cfg) {
  return {d.mass_rate, inertia_estimate_rate(d.e4, d.sigma, d.psi, est.inv_mass_aux, cfg),
          d.inv_mass_rate, inv_mass_aux_estimate_rate(d.e4, d.psi, cfg)};
}

}  // namespace bicopter
