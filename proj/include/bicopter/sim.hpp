#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicopter/config.hpp"
#include "bicopter/controller.hpp"
#include "bicopter/model.hpp"
#include "bicopter/trajectory.hpp"

namespace bicopter {

/// Plant plus estimator plus time: the closed-loop state.
struct AugmentedState {
  PlantState plant;
  EstimatorState est;
  double t{0.0};
};

inline constexpr std::size_t kAugmentedDim = 12;
using StateVector = std::array<double, kAugmentedDim>;

inline StateVector to_vector(const PlantState& p, const EstimatorState& e) {
  return {p.x1.x, p.x1.y, p.x2.x, p.x2.y, p.x3.x, p.x3.y, p.x4.x, p.x4.y,
          e.mass, e.inertia, e.inv_mass, e.inv_mass_aux};
}

inline StateVector to_vector(const AugmentedState& s) { return to_vector(s.plant, s.est); }

inline AugmentedState from_vector(const StateVector& v, double t) {
  AugmentedState s;
  s.plant = {{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}};
  s.est = {v[8], v[9], v[10], v[11]};
  s.t = t;
  return s;
}

/// Classical fourth-order Runge-Kutta step for dy/dt = f(t, y).
template <std::size_t N, class Field>
std::array<double, N> rk4_step(const std::array<double, N>& y, double t, double dt, Field&& f) {
  const auto axpy = [](const std::array<double, N>& a, double h, const std::array<double, N>& b) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + h * b[i];
    return out;
  };
  const std::array<double, N> k1 = f(t, y);
  const std::array<double, N> k2 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
  const std::array<double, N> k3 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
  const std::array<double, N> k4 = f(t + dt, axpy(y, dt, k3));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

struct ClosedLoopRates {
  PlantState plant;
  EstimatorState est;
  ControlInput u;
  ControllerDiagnostics diag;

  StateVector vector() const { return to_vector(plant, est); }
};

/// Plant and estimator rates sharing one controller snapshot. Propagates
/// SingularInputMap when |F| < eps_F.
inline ClosedLoopRates closed_loop_deriv(const AugmentedState& s, const Vec2& xi1,
                                         const ControllerConfig& cfg,
                                         const PhysicalParams& params) {
  auto [u, diag] = compute_control(s.plant, s.est, xi1, cfg);
  ClosedLoopRates r;
  r.plant = plant_derivative(s.plant, u, params);
  r.est = estimator_rates(diag, s.est, cfg);
  r.u = u;
  r.diag = diag;
  return r;
}

/// One RK4 step of the closed loop with the reference sampled at each stage time.
template <class RefFn>
AugmentedState rk4_step(const AugmentedState& s, double dt, RefFn&& ref,
                        const ControllerConfig& cfg, const PhysicalParams& params) {
  const auto field = [&](double t, const StateVector& y) {
    return closed_loop_deriv(from_vector(y, t), ref(t), cfg, params).vector();
  };
  return from_vector(rk4_step(to_vector(s), s.t, dt, field), s.t + dt);
}

// ---------------------------------------------------------------------------
// Lyapunov monitor
// ---------------------------------------------------------------------------

/// Nested Lyapunov functions and the dissipation terms of the closed-form rate.
struct LyapunovBreakdown {
  double v1{0.0};
  double v2{0.0};
  double v3{0.0};
  double v4{0.0};
  // Nonnegative dissipation terms; the closed-form rate is minus their sum.
  double dissipation_e1{0.0};
  double dissipation_e2{0.0};
  double dissipation_e3{0.0};
  double dissipation_e4{0.0};

  double rate() const {
    return -(dissipation_e1 + dissipation_e2 + dissipation_e3 + dissipation_e4);
  }
};

/// Evaluates V1..V4 with the TRUE parameters. Monitor-only.
inline LyapunovBreakdown lyapunov(const EstimatorState& est, const ControllerDiagnostics& d,
                                  const PhysicalParams& p, const ControllerConfig& cfg) {
  const double th1 = p.inv_mass();
  const double th2 = p.inv_inertia();
  const double p1 = p.mass;
  const double p2 = p.inertia;
  LyapunovBreakdown b;
  b.v1 = 0.5 * squared_norm(d.e1);
  b.v2 = b.v1 + 0.5 * squared_norm(d.e2) +
         0.5 / cfg.gamma1 * std::fabs(th1) * (est.mass - p1) * (est.mass - p1);
  b.v3 = b.v2 + 0.5 * squared_norm(d.e3);
  b.v4 = b.v3 + 0.5 * squared_norm(d.e4) +
         0.5 / cfg.gamma2 * std::fabs(th2) * (est.inertia - p2) * (est.inertia - p2) +
         0.5 / cfg.alpha1 * (th1 - est.inv_mass) * (th1 - est.inv_mass) +
         0.5 / cfg.alpha2 * (th1 - est.inv_mass_aux) * (th1 - est.inv_mass_aux);
  b.dissipation_e1 = cfg.k1 * squared_norm(d.e1);
  b.dissipation_e2 = cfg.k2 * std::fabs(th1) * squared_norm(d.e2);
  b.dissipation_e3 = cfg.k3 * squared_norm(d.e3);
  b.dissipation_e4 = cfg.k4 * (std::fabs(th2) * d.e4.x * d.e4.x + d.e4.y * d.e4.y);
  return b;
}

/// Largest estimation error each adapted scalar can have while V4 <= level,
/// i.e. the box implied by the quadratic parameter terms of V4 alone.
inline EstimatorState estimate_error_bound(double level, const PhysicalParams& p,
                                           const ControllerConfig& cfg) {
  const double th1 = std::fabs(p.inv_mass()), th2 = std::fabs(p.inv_inertia());
  return {std::sqrt(2.0 * cfg.gamma1 * level / th1), std::sqrt(2.0 * cfg.gamma2 * level / th2),
          std::sqrt(2.0 * cfg.alpha1 * level), std::sqrt(2.0 * cfg.alpha2 * level)};
}

/// Closed-form V4 rate, valid for a constant reference. Always <= 0.
inline double v4_dot_analytic(const ControllerDiagnostics& d, const PhysicalParams& p,
                              const ControllerConfig& cfg) {
  const double th1 = p.inv_mass();
  const double th2 = p.inv_inertia();
  return -cfg.k1 * squared_norm(d.e1) - cfg.k2 * std::fabs(th1) * squared_norm(d.e2) -
         cfg.k3 * squared_norm(d.e3) -
         cfg.k4 * (std::fabs(th2) * d.e4.x * d.e4.x + d.e4.y * d.e4.y);
}

/// V4 of an augmented state against reference position xi1.
inline double lyapunov_v4(const AugmentedState& s, const Vec2& xi1, const ControllerConfig& cfg,
                          const PhysicalParams& p) {
  return lyapunov(s.est, evaluate_controller(s.plant, s.est, xi1, cfg), p, cfg).v4;
}

/// dV4/dxi1 . xi1_dot by central difference in the reference argument. This is
/// the part of the true V4 rate that the closed form omits for moving references.
inline double lyapunov_reference_term(const AugmentedState& s, const Vec2& xi1,
                                      const Vec2& xi1_dot, const ControllerConfig& cfg,
                                      const PhysicalParams& p, double h = 1e-6) {
  if (xi1_dot == Vec2{}) return 0.0;
  return (lyapunov_v4(s, xi1 + h * xi1_dot, cfg, p) - lyapunov_v4(s, xi1 - h * xi1_dot, cfg, p)) /
         (2.0 * h);
}

// ---------------------------------------------------------------------------
// Simulation driver
// ---------------------------------------------------------------------------

/// One output row.
struct SimRecord {
  double t{0.0};
  PlantState plant;
  Vec2 u;
  Vec2 xi1;
  double e1_norm{0.0};
  double e2_norm{0.0};
  double e3_norm{0.0};
  double e4_norm{0.0};
  EstimatorState est;
  double v4{0.0};
  double v4_dot_analytic{0.0};
  double v4_dot_findiff{0.0};
};

struct SimSetup {
  AugmentedState initial;
  ControllerConfig cfg;
  PhysicalParams params;
  double dt{1e-3};
  double duration{0.0};
  std::size_t output_stride{1};
};

enum class SimStatus { Completed, SingularGuardTripped, NonFiniteState };

inline const char* to_string(SimStatus s) {
  switch (s) {
    case SimStatus::Completed: return "completed";
    case SimStatus::SingularGuardTripped: return "singular-guard-tripped";
    case SimStatus::NonFiniteState: return "non-finite-state";
  }
  return "?";
}

class SingularGuardTripped : public std::runtime_error {
 public:
  SingularGuardTripped(double t, const std::string& what)
      : std::runtime_error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(double t, std::string field, const std::string& what)
      : std::runtime_error(what), time_(t), field_(std::move(field)) {}
  double time() const { return time_; }
  const std::string& field() const { return field_; }

 private:
  double time_;
  std::string field_;
};

struct SimResult {
  std::vector<SimRecord> records;
  SimStatus status{SimStatus::Completed};
  double failure_time{0.0};
  std::string detail;              // message for failed runs
  std::string nonfinite_field;     // set for NonFiniteState
  double min_abs_thrust_evaluated{std::numeric_limits<double>::infinity()};
  std::size_t controller_evaluations{0};

  bool ok() const { return status == SimStatus::Completed; }

  void throw_if_failed() const {
    if (status == SimStatus::SingularGuardTripped) throw SingularGuardTripped(failure_time, detail);
    if (status == SimStatus::NonFiniteState) throw NonFiniteState(failure_time, nonfinite_field, detail);
  }
};

namespace detail {

inline std::optional<std::string> nonfinite_field(const AugmentedState& s) {
  if (!is_finite(s.plant.x1)) return "x1";
  if (!is_finite(s.plant.x2)) return "x2";
  if (!is_finite(s.plant.x3)) return "x3";
  if (!is_finite(s.plant.x4)) return "x4";
  if (!std::isfinite(s.est.mass)) return "mass_hat";
  if (!std::isfinite(s.est.inertia)) return "inertia_hat";
  if (!std::isfinite(s.est.inv_mass)) return "inv_mass_hat";
  if (!std::isfinite(s.est.inv_mass_aux)) return "inv_mass_aux_hat";
  return std::nullopt;
}

inline SimRecord make_record(const AugmentedState& s, const Vec2& xi1, const ClosedLoopRates& r,
                             const ControllerConfig& cfg, const PhysicalParams& p) {
  SimRecord rec;
  rec.t = s.t;
  rec.plant = s.plant;
  rec.u = r.u.u;
  rec.xi1 = xi1;
  rec.e1_norm = norm(r.diag.e1);
  rec.e2_norm = norm(r.diag.e2);
  rec.e3_norm = norm(r.diag.e3);
  rec.e4_norm = norm(r.diag.e4);
  rec.est = s.est;
  rec.v4 = lyapunov(s.est, r.diag, p, cfg).v4;
  rec.v4_dot_analytic = v4_dot_analytic(r.diag, p, cfg);
  return rec;
}

}  // namespace detail

/// Central differences of V4 between neighbouring records, one-sided at the ends.
inline void fill_v4_findiff(std::vector<SimRecord>& recs) {
  const std::size_t n = recs.size();
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    recs[i].v4_dot_findiff = (recs[hi].v4 - recs[lo].v4) / (recs[hi].t - recs[lo].t);
  }
}

/// Integrates the closed loop from setup.initial for setup.duration at step
/// setup.dt, recording every output_stride steps. Stops early on a singular
/// guard trip or a non-finite state; the result then carries the last good
/// record and the failure status.
template <class RefFn>
SimResult simulate(const SimSetup& setup, RefFn&& ref) {
  setup.cfg.validate();
  setup.params.validate();
  if (!(setup.dt > 0.0)) throw std::invalid_argument("simulate: dt must be > 0");
  if (!(setup.duration >= 0.0)) throw std::invalid_argument("simulate: duration must be >= 0");
  if (setup.output_stride == 0) throw std::invalid_argument("simulate: output_stride must be >= 1");

  const auto& cfg = setup.cfg;
  const auto& params = setup.params;
  const auto steps = static_cast<long long>(std::llround(setup.duration / setup.dt));
  const auto stride = static_cast<long long>(setup.output_stride);

  SimResult result;
  result.records.reserve(static_cast<std::size_t>(steps / stride + 2));

  const auto eval = [&](const AugmentedState& s) {
    const Vec2 xi1 = ref(s.t);
    ClosedLoopRates r = closed_loop_deriv(s, xi1, cfg, params);
    ++result.controller_evaluations;
    result.min_abs_thrust_evaluated =
        std::fmin(result.min_abs_thrust_evaluated, std::fabs(s.plant.thrust()));
    return r;
  };
  const auto field = [&](double t, const StateVector& y) { return eval(from_vector(y, t)).vector(); };

  AugmentedState s = setup.initial;
  s.t = 0.0;
  bool last_recorded = false;
  for (long long k = 0;; ++k) {
    s.t = static_cast<double>(k) * setup.dt;
    try {
      if (k % stride == 0) {
        const ClosedLoopRates r = eval(s);
        result.records.push_back(detail::make_record(s, ref(s.t), r, cfg, params));
        last_recorded = true;
      } else {
        last_recorded = false;
      }
      if (k == steps) break;
      const StateVector next = rk4_step(to_vector(s), s.t, setup.dt, field);
      const AugmentedState candidate = from_vector(next, static_cast<double>(k + 1) * setup.dt);
      if (auto bad = detail::nonfinite_field(candidate)) {
        result.status = SimStatus::NonFiniteState;
        result.failure_time = candidate.t;
        result.nonfinite_field = *bad;
        result.detail = "non-finite state in " + *bad + " at t = " + std::to_string(candidate.t);
        break;
      }
      s = candidate;
    } catch (const SingularInputMap& e) {
      if (!std::isfinite(e.thrust())) {
        // a stage state went non-finite before the step completed
        result.status = SimStatus::NonFiniteState;
        result.failure_time = s.t + setup.dt;
        result.nonfinite_field = "x3";
        result.detail = "non-finite state in x3 at t = " + std::to_string(result.failure_time);
        break;
      }
      result.status = SimStatus::SingularGuardTripped;
      result.failure_time = s.t;
      result.detail = std::string(e.what()) + " at t = " + std::to_string(s.t);
      break;
    }
  }

  // Diagnostic record: last good state when it fell between output strides.
  if (!result.ok() && !last_recorded) {
    try {
      const ClosedLoopRates r = eval(s);
      result.records.push_back(detail::make_record(s, ref(s.t), r, cfg, params));
    } catch (const SingularInputMap&) {
    }
  }
  fill_v4_findiff(result.records);
  return result;
}

}  // namespace bicopter
