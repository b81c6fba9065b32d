#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bicopter/controller.hpp"
#include "bicopter/harness/csv.hpp"
#include "bicopter/harness/preset.hpp"
#include "bicopter/model.hpp"
#include "bicopter/sim.hpp"
#include "bicopter/trajectory.hpp"

/// Oracle suite behind `bicopter verify`. Every check compares the
/// implementation against an independent route (finite differences,
/// closed forms, multiply-back, brute-force enumeration) and reports one
/// pass/fail row. Output is a pure function of the options.
namespace bicopter::harness {

struct CheckResult {
  std::string name;
  bool passed{false};
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed{1};
  std::size_t samples{10000};
  bool inject_psi_sign_flip{false};  // mutation-sensitivity hook
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }

  void print(std::ostream& os) const {
    std::size_t width = 0;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    for (const auto& c : checks) {
      os << (c.passed ? "PASS  " : "FAIL  ") << c.name << std::string(width - c.name.size() + 2, ' ')
         << c.detail << '\n';
    }
    std::size_t n_pass = 0;
    for (const auto& c : checks) n_pass += c.passed ? 1 : 0;
    os << n_pass << '/' << checks.size() << " checks passed\n";
  }
};

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

/// Deterministic sampler of closed-loop states on the guarded domain.
class StateSampler {
 public:
  explicit StateSampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  Vec2 vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }

  /// |F| in [f_lo, f_hi] with random sign.
  double thrust(double f_lo, double f_hi) {
    const double f = uniform(f_lo, f_hi);
    return uniform(0.0, 1.0) < 0.5 ? -f : f;
  }

  AugmentedState state(double f_lo = 0.5, double f_hi = 30.0) {
    AugmentedState s;
    s.plant.x1 = vec(-5.0, 5.0);
    s.plant.x2 = vec(-2.0, 2.0);
    s.plant.x3 = {thrust(f_lo, f_hi), uniform(-std::numbers::pi, std::numbers::pi)};
    s.plant.x4 = vec(-2.0, 2.0);
    s.est = {uniform(-2.0, 2.0), uniform(-2.0, 2.0), uniform(-2.0, 2.0), uniform(-2.0, 2.0)};
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

namespace checks {

// The record-level central difference cannot resolve the first ~1 s, where
// the e4 loop rings at a period of a few steps.
inline constexpr double kWarmup = 2.0;

inline CheckResult jacobian_determinant(StateSampler& rng, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x3{rng.thrust(1e-3, 100.0), rng.uniform(-std::numbers::pi, std::numbers::pi)};
    worst = std::max(worst, std::fabs(thrust_jacobian(x3).det() + x3.x) / std::fabs(x3.x));
  }
  return {"jacobian det = -F", worst <= 1e-12, "max rel err " + sci(worst) + " (tol 1e-12)"};
}

inline CheckResult jacobian_inverse(StateSampler& rng, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 x3{rng.thrust(1e-3, 100.0), rng.uniform(-std::numbers::pi, std::numbers::pi)};
    const Mat2 prod = thrust_jacobian_inverse(x3) * thrust_jacobian(x3);
    const double err = max_abs(prod - Mat2::identity());
    worst = std::max(worst, err / (1e-12 * (1.0 + 1.0 / std::fabs(x3.x))));
  }
  return {"jacobian inverse multiply-back", worst <= 1.0,
          "max err / tol " + sci(worst) + " (tol 1e-12 (1 + 1/|F|))"};
}

inline CheckResult jacobian_rates(StateSampler& rng, std::size_t n) {
  constexpr double h = 1e-5;
  double worst = 0.0, worst_inv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.state();
    const Vec2 x3 = s.plant.x3;
    const Vec2 rate = x3_rate(s.plant.x4);
    const Mat2 fd = (1.0 / (2.0 * h)) * (thrust_jacobian(x3 + h * rate) - thrust_jacobian(x3 - h * rate));
    worst = std::max(worst, max_abs(fd - thrust_jacobian_rate(x3, rate)));
    const Mat2 fd_inv = (1.0 / (2.0 * h)) * (thrust_jacobian_inverse(x3 + h * rate) -
                                             thrust_jacobian_inverse(x3 - h * rate));
    worst_inv = std::max(worst_inv, max_abs(fd_inv - thrust_jacobian_inverse_rate(x3, rate)));
  }
  const bool ok = worst <= 1e-6 && worst_inv <= 1e-6;
  return {"jacobian rates vs central difference", ok,
          "max err G " + sci(worst) + ", G^-1 " + sci(worst_inv) + " (h 1e-5, tol 1e-6)"};
}

inline CheckResult rate_command_multiply_back(StateSampler& rng, std::size_t n,
                                              const ControllerConfig& cfg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.state(0.1, 100.0);
    const Vec2 xi1 = rng.vec(-5.0, 5.0);
    const Vec2 bracket = rate_command_bracket(s.plant, s.est, xi1, cfg);
    const Vec2 cmd = rate_command(s.plant, s.est, xi1, cfg);
    const Vec2 residual = thrust_jacobian(s.plant.x3) * cmd + bracket;
    worst = std::max(worst, norm(residual) / std::max(1.0, norm(bracket)));
  }
  return {"rate command multiply-back", worst <= 1e-10, "max rel residual " + sci(worst) + " (tol 1e-10)"};
}

inline CheckResult error_chain(StateSampler& rng, std::size_t n, const ControllerConfig& cfg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.state();
    const Vec2 xi1 = rng.vec(-5.0, 5.0);
    const auto d = evaluate_controller(s.plant, s.est, xi1, cfg);
    const Vec2 e1 = s.plant.x1 - xi1;
    const Vec2 e2 = s.plant.x2 + cfg.k1 * e1;
    const Vec2 phi = e1 + cfg.k1 * s.plant.x2 + Vec2{0.0, -cfg.gravity};
    const Vec2 e3 = thrust_vector(s.plant.x3) + s.est.mass * phi + cfg.k2 * cfg.sign_inv_mass * e2;
    worst = std::max({worst, norm(d.e2 - e2), norm(d.e3 - e3) / std::max(1.0, norm(e3))});
  }
  return {"error-coordinate closed forms", worst <= 1e-12, "max err " + sci(worst) + " (tol 1e-12)"};
}

/// Sigma + Psi/m = -d/dt(rate command) + J^T e3 along the closed-loop flow.
inline CheckResult sigma_psi_flow(StateSampler& rng, std::size_t n, const ControllerConfig& cfg,
                                  const PhysicalParams& p) {
  constexpr double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.state();
    const Vec2 xi1 = rng.vec(-5.0, 5.0);
    const auto rates = closed_loop_deriv(s, xi1, cfg, p);
    const StateVector y = to_vector(s), dy = rates.vector();
    StateVector yp = y, ym = y;
    for (std::size_t k = 0; k < y.size(); ++k) {
      yp[k] += h * dy[k];
      ym[k] -= h * dy[k];
    }
    const auto sp = from_vector(yp, 0.0), sm = from_vector(ym, 0.0);
    const Vec2 cmd_rate = (1.0 / (2.0 * h)) * (rate_command(sp.plant, sp.est, xi1, cfg) -
                                               rate_command(sm.plant, sm.est, xi1, cfg));
    const auto& d = rates.diag;
    const Vec2 lhs = d.sigma + p.inv_mass() * d.psi;
    const Vec2 rhs = -cmd_rate + thrust_jacobian(s.plant.x3).transposed() * d.e3;
    worst = std::max(worst, norm(lhs - rhs) / std::max(1.0, norm(rhs)));
  }
  return {"Sigma/Psi vs flow derivative of rate command", worst <= 1e-5,
          "max rel err " + sci(worst) + " (h 1e-6, tol 1e-5)"};
}

/// Directional derivative of V4 along the closed-loop flow equals the closed form.
inline CheckResult lyapunov_identity(StateSampler& rng, std::size_t n, const ControllerConfig& cfg,
                                     const PhysicalParams& p) {
  constexpr double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.state();
    const Vec2 xi1 = rng.vec(-5.0, 5.0);
    const auto rates = closed_loop_deriv(s, xi1, cfg, p);
    const StateVector y = to_vector(s), dy = rates.vector();
    StateVector yp = y, ym = y;
    for (std::size_t k = 0; k < y.size(); ++k) {
      yp[k] += h * dy[k];
      ym[k] -= h * dy[k];
    }
    const double fd = (lyapunov_v4(from_vector(yp, 0.0), xi1, cfg, p) -
                       lyapunov_v4(from_vector(ym, 0.0), xi1, cfg, p)) / (2.0 * h);
    const double closed = v4_dot_analytic(rates.diag, p, cfg);
    worst = std::max(worst, std::fabs(fd - closed) / std::max(1.0, std::fabs(closed)));
  }
  return {"V4 rate identity at random states", worst <= 1e-5,
          "max rel err " + sci(worst) + " (h 1e-6, tol 1e-5)"};
}

inline CheckResult parameter_firewall(StateSampler& rng, std::size_t n, const ControllerConfig& cfg) {
  const PhysicalParams a{1.0, 0.2, cfg.gravity}, b{3.0, 0.7, cfg.gravity};
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = rng.state();
    const Vec2 xi1 = rng.vec(-5.0, 5.0);
    const Vec2 ua = closed_loop_deriv(s, xi1, cfg, a).u.u;
    const Vec2 ub = closed_loop_deriv(s, xi1, cfg, b).u.u;
    if (std::memcmp(&ua, &ub, sizeof ua) != 0) ++mismatches;
  }
  return {"parameter firewall (m, J) -> u", mismatches == 0,
          std::to_string(mismatches) + " of " + std::to_string(n) + " inputs differ"};
}

inline CheckResult estimator_fixed_point(StateSampler& rng, std::size_t n, const ControllerConfig& cfg) {
  double worst = 0.0, selector = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 zero{};
    const Vec2 a = rng.vec(-10.0, 10.0), b = rng.vec(-10.0, 10.0), x3 = rng.vec(-10.0, 10.0);
    const EstimatorState est{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    worst = std::max({worst, std::fabs(mass_estimate_rate(a, zero, b, cfg)),
                      std::fabs(inertia_estimate_rate(zero, a, b, est.inv_mass_aux, cfg)),
                      std::fabs(inv_mass_estimate_rate(zero, zero, x3, est, cfg)),
                      std::fabs(inv_mass_aux_estimate_rate(zero, a, cfg))});
    const Vec2 e4 = rng.vec(-10.0, 10.0);
    const double base = inertia_estimate_rate(e4, a, b, est.inv_mass_aux, cfg);
    const double moved = inertia_estimate_rate({e4.x, e4.y + 7.0}, {a.x, a.y - 3.0}, {b.x, b.y + 5.0},
                                               est.inv_mass_aux, cfg);
    selector = std::max(selector, std::fabs(base - moved));
  }
  const bool ok = worst == 0.0 && selector == 0.0;
  return {"adaptation laws: zero-error fixed point, selector", ok,
          "max |rate| " + sci(worst) + ", selector leak " + sci(selector)};
}

inline CheckResult rk4_scalar_order() {
  const auto solve = [](double dt) {
    std::array<double, 1> y{1.0};
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < n; ++k) {
      y = rk4_step(y, k * dt, dt, [](double, const std::array<double, 1>& v) {
        return std::array<double, 1>{-v[0]};
      });
    }
    return std::fabs(y[0] - std::exp(-1.0));
  };
  const double ratio = solve(0.1) / solve(0.05);
  return {"RK4 order on y' = -y", ratio >= 15.0 && ratio <= 17.0,
          "error ratio " + sci(ratio) + " (expected ~16)"};
}

inline CheckResult closed_loop_order(const Preset& base) {
  const auto position_at_1s = [&](double dt) {
    Preset p = base;
    p.dt = dt;
    p.duration = 1.0;
    p.output_stride = static_cast<std::size_t>(std::lround(1.0 / dt));
    const auto res = simulate_preset(p);
    return res.ok() ? res.records.back().plant.x1 : Vec2{NAN, NAN};
  };
  const Vec2 a = position_at_1s(2e-3), b = position_at_1s(1e-3), c = position_at_1s(5e-4);
  const double order = std::log2(norm(a - b) / norm(b - c));
  return {"closed-loop RK4 observed order (" + base.name + ")", order >= 3.5,
          "order " + sci(order) + " (min 3.5)"};
}

inline CheckResult regulation_run(const Preset& p) {
  const auto res = simulate_preset(p);
  if (!res.ok()) return {"regulation run", false, res.detail};
  const auto& r = res.records;
  double max_late_e1 = 0.0, max_increase = -1e300, worst_ratio = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i].t >= 60.0) max_late_e1 = std::max(max_late_e1, r[i].e1_norm);
    if (i + 1 < r.size()) max_increase = std::max(max_increase, r[i + 1].v4 - r[i].v4);
    if (i > 0 && i + 1 < r.size() && r[i].t >= kWarmup) {
      const double tol = std::max(1e-4, 1e-3 * std::fabs(r[i].v4_dot_analytic));
      worst_ratio = std::max(worst_ratio, std::fabs(r[i].v4_dot_findiff - r[i].v4_dot_analytic) / tol);
    }
  }
  const double v_ratio = r.back().v4 / r.front().v4;
  const bool ok = max_late_e1 < 1e-3 && v_ratio < 0.05 && max_increase <= 1e-6 && worst_ratio <= 1.0;
  return {"regulation: convergence and V4 descent", ok,
          "max |e1| after 60 s " + sci(max_late_e1) + ", V4(T)/V4(0) " + sci(v_ratio) +
              ", max V4 step increase " + sci(max_increase) + ", FD/closed-form mismatch (t>=2 s) " +
              sci(worst_ratio) + " x tol"};
}

/// Along a moving reference the true rate is the closed form plus dV4/dxi1 . xi1_dot.
inline CheckResult moving_reference_identity(const Preset& p) {
  auto [setup, ref] = make_setup(p);
  const auto res = simulate(setup, ref);
  if (!res.ok()) return {"V4 rate identity along " + p.name, false, res.detail};
  const auto& r = res.records;
  double worst_ratio = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i].t < kWarmup) continue;
    AugmentedState s;
    s.plant = r[i].plant;
    s.est = r[i].est;
    s.t = r[i].t;
    const double total = r[i].v4_dot_analytic +
                         lyapunov_reference_term(s, r[i].xi1, ref.velocity(r[i].t), setup.cfg, setup.params);
    const double tol = std::max(1e-4, 1e-3 * std::fabs(total));
    worst_ratio = std::max(worst_ratio, std::fabs(r[i].v4_dot_findiff - total) / tol);
    ++checked;
  }
  return {"V4 rate identity with reference term (" + p.name + ")", worst_ratio <= 1.0,
          std::to_string(checked) + " samples, worst mismatch " + sci(worst_ratio) + " x tol"};
}

inline CheckResult guard_trip(const Preset& p) {
  const auto res = simulate_preset(p);
  const bool tripped = res.status == SimStatus::SingularGuardTripped;
  const bool guarded = res.min_abs_thrust_evaluated >= p.cfg.eps_f;
  bool finite = true;
  for (const auto& rec : res.records) finite = finite && is_finite(rec.plant) && std::isfinite(rec.v4);
  return {"singular guard trips cleanly (" + p.name + ")", tripped && guarded && finite,
          std::string(to_string(res.status)) + " at t = " + sci(res.failure_time) +
              ", min |F| evaluated " + sci(res.min_abs_thrust_evaluated) + " vs eps_F " + sci(p.cfg.eps_f)};
}

inline CheckResult hilbert_structure() {
  bool ok = true;
  std::string why;
  for (int order = 1; order <= 4; ++order) {
    const long n = 1L << order;
    const double side = static_cast<double>(n - 1);  // unit pitch
    const auto pts = hilbert_waypoints(order, side);
    std::set<std::pair<long, long>> seen;
    for (const auto& q : pts) seen.insert({std::lround(q.x), std::lround(q.y)});
    if (pts.size() != static_cast<std::size_t>(n * n) || seen.size() != pts.size()) {
      ok = false;
      why += " order " + std::to_string(order) + " revisits cells;";
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec2 d = pts[i + 1] - pts[i];
      if (std::fabs(d.x) + std::fabs(d.y) != 1.0 || (d.x != 0.0 && d.y != 0.0)) {
        ok = false;
        why += " order " + std::to_string(order) + " non-unit step;";
        break;
      }
    }
  }
  return {"Hilbert waypoints: visit-once, unit axis-aligned steps", ok, ok ? "orders 1-4" : why};
}

inline CheckResult trapezoid_timing() {
  const double d1 = time_parameterize({{0, 0}, {1, 0}}, 1.0, 1.0).duration;
  const double d4 = time_parameterize({{0, 0}, {4, 0}}, 1.0, 1.0).duration;
  const auto traj = time_parameterize(hilbert_waypoints(2, 4.0), 1.0, 1.0);
  double expected = 0.0;
  for (const auto& s : traj.segments) expected += trapezoid_duration(s.length, 1.0, 1.0);
  // Speed and acceleration limits by 1 kHz differencing.
  constexpr double h = 1e-3;
  double vmax = 0.0, amax = 0.0;
  Vec2 prev = sample(traj, 0.0), prev_v{};
  for (int k = 1; k * h <= traj.duration + 1.0; ++k) {
    const Vec2 cur = sample(traj, k * h);
    const Vec2 v = (1.0 / h) * (cur - prev);
    vmax = std::max(vmax, norm(v));
    if (k > 1) amax = std::max(amax, norm((1.0 / h) * (v - prev_v)));
    prev = cur;
    prev_v = v;
  }
  // Differencing across a corner mixes directions; allow the O(h) smear only in acceleration.
  const bool ok = d1 == 2.0 && d4 == 5.0 && traj.duration == expected && vmax <= 1.0 + 1e-9 &&
                  amax <= 1.0 + 1e-6 + 1e-3;
  return {"trapezoid timing and limits", ok,
          "L=1 -> " + sci(d1) + " s, L=4 -> " + sci(d4) + " s, hilbert " + sci(traj.duration) +
              " s, max speed " + sci(vmax) + ", max accel " + sci(amax)};
}

/// Estimates stay inside the box implied by V4 <= V4(0), and do not converge.
inline CheckResult estimate_bounds(const Preset& p) {
  const auto res = simulate_preset(p);
  if (!res.ok()) return {"estimates bounded by V4(0) (" + p.name + ")", false, res.detail};
  const auto bound = estimate_error_bound(res.records.front().v4, p.params, p.cfg);
  double worst = 0.0;
  for (const auto& r : res.records) {
    worst = std::max({worst, std::fabs(r.est.mass - p.params.mass) / bound.mass,
                      std::fabs(r.est.inertia - p.params.inertia) / bound.inertia,
                      std::fabs(r.est.inv_mass - p.params.inv_mass()) / bound.inv_mass,
                      std::fabs(r.est.inv_mass_aux - p.params.inv_mass()) / bound.inv_mass_aux});
  }
  return {"estimates bounded by V4(0) (" + p.name + ")", worst <= 1.0,
          "max |error| / bound " + sci(worst)};
}

inline CheckResult csv_round_trip(const Preset& base) {
  Preset p = base;
  p.duration = 2.0;
  p.output_stride = 10;
  const auto res = simulate_preset(p);
  std::stringstream ss;
  write_records_csv(ss, res.records);
  const auto back = read_records_csv(ss);
  bool ok = back.size() == res.records.size();
  for (std::size_t i = 0; ok && i < back.size(); ++i) {
    const auto a = record_fields(res.records[i]);
    const auto b = record_fields(back[i]);
    for (std::size_t k = 0; k < a.size(); ++k) {
      ok = ok && std::strtod(format_g9(a[k]).c_str(), nullptr) == b[k];
    }
  }
  return {"records CSV round trip at 9 significant digits", ok, std::to_string(back.size()) + " rows"};
}

}  // namespace checks

/// Runs every oracle. With inject_psi_sign_flip the controller-algebra checks
/// are expected to fail.
inline VerifyReport verify(const VerifyOptions& opt) {
  VerifyReport rep;
  StateSampler rng(opt.seed);
  const std::size_t n = opt.samples;

  Preset ellipse = *find_preset("ellipse-slow");
  Preset regulation = *find_preset("regulation");
  const Preset guard = *find_preset("guard-trip");
  ellipse.cfg.inject_psi_sign_flip = opt.inject_psi_sign_flip;
  regulation.cfg.inject_psi_sign_flip = opt.inject_psi_sign_flip;
  const ControllerConfig cfg = ellipse.cfg;
  const PhysicalParams params = ellipse.params;

  rep.checks.push_back(checks::jacobian_determinant(rng, n));
  rep.checks.push_back(checks::jacobian_inverse(rng, n));
  rep.checks.push_back(checks::jacobian_rates(rng, n));
  rep.checks.push_back(checks::rate_command_multiply_back(rng, n, cfg));
  rep.checks.push_back(checks::error_chain(rng, n, cfg));
  rep.checks.push_back(checks::sigma_psi_flow(rng, n, cfg, params));
  rep.checks.push_back(checks::lyapunov_identity(rng, n, cfg, params));
  rep.checks.push_back(checks::parameter_firewall(rng, n, cfg));
  rep.checks.push_back(checks::estimator_fixed_point(rng, n, cfg));
  rep.checks.push_back(checks::rk4_scalar_order());
  rep.checks.push_back(checks::closed_loop_order(ellipse));
  rep.checks.push_back(checks::regulation_run(regulation));
  rep.checks.push_back(checks::moving_reference_identity(ellipse));
  rep.checks.push_back(checks::estimate_bounds(regulation));
  rep.checks.push_back(checks::guard_trip(guard));
  rep.checks.push_back(checks::hilbert_structure());
  rep.checks.push_back(checks::trapezoid_timing());
  rep.checks.push_back(checks::csv_round_trip(ellipse));
  return rep;
}

}  // namespace bicopter::harness
