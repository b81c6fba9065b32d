#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>

#include "bicopter/controller.hpp"
#include "bicopter/sim.hpp"

using namespace bicopter;
using Catch::Approx;

namespace {

constexpr double g = 9.81;

struct Sample {
  PlantState s;
  EstimatorState est;
  Vec2 xi1;
};

Sample random_sample(std::mt19937_64& rng, double f_lo = 0.5, double f_hi = 30.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), mag(f_lo, f_hi);
  Sample out;
  out.s.x1 = {5 * u(rng), 5 * u(rng)};
  out.s.x2 = {2 * u(rng), 2 * u(rng)};
  out.s.x3 = {(u(rng) < 0 ? -1 : 1) * mag(rng), 3.14 * u(rng)};
  out.s.x4 = {2 * u(rng), 2 * u(rng)};
  out.est = {2 * u(rng), 2 * u(rng), 2 * u(rng), 2 * u(rng)};
  out.xi1 = {5 * u(rng), 5 * u(rng)};
  return out;
}

// Hover at F = m_hat g with m_hat = 1: every error vanishes except e4.
Sample hover() {
  Sample h;
  h.s.x1 = {0.3, -0.2};
  h.s.x3 = {g, 0.0};
  h.est = {1.0, 0.0, 0.0, 0.0};
  h.xi1 = h.s.x1;
  return h;
}

}  // namespace

TEST_CASE("tracking error and velocity command", "[controller]") {
  ControllerConfig cfg;
  CHECK(tracking_error({0, 0}, {0, 0}) == Vec2{0, 0});
  CHECK(tracking_error({1, 2}, {1, 0}) == Vec2{0, 2});
  EllipseConfig e;
  CHECK(norm(tracking_error(ellipse_ref(0.0, e), ellipse_ref(0.0, e))) == 0.0);
  CHECK(velocity_command({1, 0}, cfg) == Vec2{-1, 0});
  CHECK(velocity_command({0, 0}, cfg) == Vec2{0, 0});
  CHECK(velocity_command({0.5, -0.5}, cfg) == Vec2{-0.5, 0.5});
}

TEST_CASE("phi term", "[controller]") {
  ControllerConfig cfg;
  CHECK(phi_term({0, 0}, {0, 0}, cfg) == Vec2{0, -g});
  const Vec2 p = phi_term({1, 0}, {0, 1}, cfg);
  CHECK(p.x == 1.0);
  CHECK(p.y == Approx(-8.81));
}

TEST_CASE("thrust command", "[controller]") {
  ControllerConfig cfg;
  EstimatorState est;
  CHECK(thrust_command({0, 0}, {0, 0}, est, cfg) == Vec2{0, 0});
  // zero mass estimate: -k2 e2 with e2 = x2 + k1 e1
  CHECK(thrust_command({0, 0}, {1, 0}, est, cfg) == Vec2{-5, 0});
  // unit mass estimate with e1 = (0, g), x2 = 0: the Phi part cancels, e2 = (0, g)
  est.mass = 1.0;
  const Vec2 c = thrust_command({0, g}, {0, 0}, est, cfg);
  CHECK(c.x == 0.0);
  CHECK(c.y == Approx(-5 * g));
}

TEST_CASE("error coordinates equal their compositional definitions", "[controller][oracle]") {
  std::mt19937_64 rng(21);
  ControllerConfig cfg;
  for (double sign : {1.0, -1.0}) {
    cfg.sign_inv_mass = sign;
    for (int i = 0; i < 2000; ++i) {
      const auto [s, est, xi1] = random_sample(rng);
      const auto d = evaluate_controller(s, est, xi1, cfg);
      const Vec2 e1 = s.x1 - xi1;
      const Vec2 xi2 = -cfg.k1 * e1;
      const Vec2 e2 = s.x2 - xi2;
      const Vec2 f2{0, -g};
      const Vec2 xi3 = -est.mass * (e1 + f2 + cfg.k1 * s.x2) - cfg.k2 * sign * e2;
      const Vec2 g2{-std::sin(s.x3.y) * s.x3.x, std::cos(s.x3.y) * s.x3.x};
      REQUIRE(norm(d.e1 - e1) == 0.0);
      REQUIRE(norm(d.e2 - (s.x2 + cfg.k1 * e1)) <= 1e-14 * (1 + norm(e2)));
      REQUIRE(norm(d.e2 - e2) <= 1e-14 * (1 + norm(e2)));
      REQUIRE(norm(d.thrust_cmd - xi3) <= 1e-12 * (1 + norm(xi3)));
      REQUIRE(norm(d.e3 - (g2 - xi3)) <= 1e-12 * (1 + norm(xi3)));
      REQUIRE(norm(d.e4 - (s.x4 - d.rate_cmd)) == 0.0);
    }
  }
}

TEST_CASE("rate command at hover", "[controller]") {
  ControllerConfig cfg;
  // Zero estimates, at rest: e3 = thrust vector, bracket = k2 f2 + k3 g2.
  PlantState s;
  s.x3 = {2.0, 0.0};
  EstimatorState zero;
  const Vec2 b0 = rate_command_bracket(s, zero, {0, 0}, cfg);
  CHECK(b0.x == Approx(0.0).margin(1e-14));
  CHECK(b0.y == Approx(-5 * g + 10 * 2.0));

  // Unit mass estimate at F = g: e3 = 0, bracket = (k1 + k2) f2, command (0, (k1 + k2) g).
  const auto h = hover();
  const Vec2 b = rate_command_bracket(h.s, h.est, h.xi1, cfg);
  CHECK(b.x == Approx(0.0).margin(1e-14));
  CHECK(b.y == Approx(-6 * g));
  const Vec2 cmd = rate_command(h.s, h.est, h.xi1, cfg);
  CHECK(cmd.x == Approx(0.0).margin(1e-14));  // roll rate
  CHECK(cmd.y == Approx(6 * g));               // thrust rate
}

TEST_CASE("rate command multiplies back to minus the bracket", "[controller][oracle]") {
  std::mt19937_64 rng(22);
  ControllerConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto [s, est, xi1] = random_sample(rng, 0.1, 100.0);
    const Vec2 b = rate_command_bracket(s, est, xi1, cfg);
    const Vec2 r = thrust_jacobian(s.x3) * rate_command(s, est, xi1, cfg) + b;
    worst = std::max(worst, norm(r) / std::max(1.0, norm(b)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("Sigma and Psi at hover", "[controller]") {
  ControllerConfig cfg;
  const auto h = hover();
  const auto d = evaluate_controller(h.s, h.est, h.xi1, cfg);
  REQUIRE(norm(d.e1) == 0.0);
  REQUIRE(norm(d.e2) == 0.0);
  REQUIRE(norm(d.e3) <= 1e-14);
  // Hand expansion at this point: the bracket rate reduces to
  // (gamma1 g^2 + m_hat + k1 k2 + k3 (k1 + k2)) f2, the regressor to
  // (gamma1 g^3 + k2 (k1 + k3) g + m_hat g) along the thrust axis.
  const double known = 0.1 * g * g + 1 + 5 + 10 * 6;
  CHECK(d.sigma.x == Approx(0.0).margin(1e-12));
  CHECK(d.sigma.y == Approx(-known * g).epsilon(1e-12));
  const double regressor = 0.1 * g * g * g + 66 * g;
  CHECK(d.psi.x == Approx(0.0).margin(1e-12));
  CHECK(d.psi.y == Approx(regressor).epsilon(1e-12));
  // u = -([[0,1],[0,0]] Sigma + k4 [[0,1],[1,0]] e4) with e4 = (0, -(k1 + k2) g).
  const auto [u, diag] = compute_control(h.s, h.est, h.xi1, cfg);
  CHECK(u.u.x == Approx(known * g + 20 * 6 * g).epsilon(1e-12));
  CHECK(u.u.y == Approx(0.0).margin(1e-12));
}

TEST_CASE("Psi with vanishing Phi and frozen mass estimate", "[controller]") {
  ControllerConfig cfg;
  PlantState s;
  s.x1 = {0.0, g};  // e1 = (0, g) cancels gravity in Phi
  s.x3 = {3.0, 0.4};
  s.x4 = {0.2, -0.1};
  EstimatorState zero;
  const auto d = evaluate_controller(s, zero, {0, 0}, cfg);
  REQUIRE(norm(d.phi) <= 1e-15);
  REQUIRE(d.mass_rate == 0.0);
  const Vec2 expected = thrust_jacobian_inverse(s.x3) * ((5.0 + 50.0) * thrust_vector(s.x3));
  CHECK(norm(d.psi - expected) <= 1e-12 * norm(expected));
}

TEST_CASE("Psi terms other than the first are linear in thrust", "[controller]") {
  // With Phi = 0 the first term drops; doubling F doubles G Psi.
  ControllerConfig cfg;
  PlantState s;
  s.x1 = {0.0, g};
  s.x3 = {3.0, 0.4};
  EstimatorState est{0.7, 0.1, 0.3, -0.2};
  const auto d1 = evaluate_controller(s, est, {0, 0}, cfg);
  PlantState s2 = s;
  s2.x3.x *= 2.0;
  const auto d2 = evaluate_controller(s2, est, {0, 0}, cfg);
  const Vec2 a = thrust_jacobian(s.x3) * d1.psi;
  const Vec2 b = thrust_jacobian(s2.x3) * d2.psi;
  CHECK(norm(b - 2.0 * a) <= 1e-12 * norm(b));
}

TEST_CASE("control law expansion", "[controller]") {
  ControllerConfig cfg;
  ControllerDiagnostics d;
  EstimatorState est;  // inertia estimate 0
  const double a = 0.3, b = -1.1, c = 2.5, dd = 4.0;
  d.e4 = {a, b};
  d.sigma = {c, dd};
  const Vec2 u = control_from(d, est, cfg).u;
  CHECK(u.x == Approx(-(dd + 20 * b)));
  CHECK(u.y == Approx(-(20 * a)));
  ControllerDiagnostics zero;
  CHECK(control_from(zero, {0.0, 0.7, 0.0, 0.4}, cfg).u == Vec2{0, 0});
  // Nonzero inertia estimate routes the first drift component into M.
  est.inertia = 0.5;
  const Vec2 u2 = control_from(d, est, cfg).u;
  CHECK(u2.y == Approx(-(0.5 * c + 20 * a)));
}

TEST_CASE("Sigma and Psi reproduce the flow derivative of the rate command", "[controller][oracle]") {
  std::mt19937_64 rng(23);
  ControllerConfig cfg;
  const PhysicalParams p;
  for (double s1 : {1.0, -1.0}) {
    cfg.sign_inv_mass = s1;
    for (int i = 0; i < 500; ++i) {
      const auto [plant, est, xi1] = random_sample(rng);
      AugmentedState s{plant, est, 0.0};
      const auto r = closed_loop_deriv(s, xi1, cfg, p);
      const auto y = to_vector(s);
      const auto dy = r.vector();
      const double h = 1e-6;
      StateVector yp = y, ym = y;
      for (std::size_t k = 0; k < y.size(); ++k) {
        yp[k] += h * dy[k];
        ym[k] -= h * dy[k];
      }
      const auto sp = from_vector(yp, 0), sm = from_vector(ym, 0);
      const Vec2 cmd_rate = (1.0 / (2 * h)) * (rate_command(sp.plant, sp.est, xi1, cfg) -
                                              rate_command(sm.plant, sm.est, xi1, cfg));
      const Vec2 lhs = r.diag.sigma + p.inv_mass() * r.diag.psi;
      const Vec2 rhs = -cmd_rate + thrust_jacobian(plant.x3).transposed() * r.diag.e3;
      REQUIRE(norm(lhs - rhs) <= 1e-5 * std::max(1.0, norm(rhs)));
    }
  }
}

TEST_CASE("controller never reads physical parameters", "[controller][oracle]") {
  std::mt19937_64 rng(24);
  ControllerConfig cfg;
  const PhysicalParams a{1.0, 0.2, g}, b{3.0, 0.7, g};
  for (int i = 0; i < 10000; ++i) {
    const auto [plant, est, xi1] = random_sample(rng);
    const AugmentedState s{plant, est, 0.0};
    const Vec2 ua = closed_loop_deriv(s, xi1, cfg, a).u.u;
    const Vec2 ub = closed_loop_deriv(s, xi1, cfg, b).u.u;
    REQUIRE(std::memcmp(&ua, &ub, sizeof ua) == 0);
  }
}

TEST_CASE("controller is locally Lipschitz on the guarded domain", "[controller]") {
  std::mt19937_64 rng(25);
  ControllerConfig cfg;
  for (int i = 0; i < 200; ++i) {
    const auto [plant, est, xi1] = random_sample(rng);
    const Vec2 u0 = compute_control(plant, est, xi1, cfg).first.u;
    const auto shifted = [&](double delta) {
      PlantState q = plant;
      q.x1 += Vec2{delta, -delta};
      q.x2 += Vec2{delta, delta};
      q.x3 += Vec2{delta, delta};
      q.x4 += Vec2{-delta, delta};
      return norm(compute_control(q, est, xi1, cfg).first.u - u0);
    };
    const double d1 = shifted(1e-6), d2 = shifted(5e-7);
    REQUIRE(std::isfinite(d1));
    REQUIRE(d1 / d2 == Approx(2.0).epsilon(1e-2));
  }
}

TEST_CASE("controller output is finite for guarded random states", "[controller]") {
  std::mt19937_64 rng(26);
  ControllerConfig cfg;
  for (int i = 0; i < 10000; ++i) {
    const auto [plant, est, xi1] = random_sample(rng, 0.1, 100.0);
    const auto [u, d] = compute_control(plant, est, xi1, cfg);
    REQUIRE(is_finite(u.u));
    REQUIRE(is_finite(d.sigma));
    REQUIRE(is_finite(d.psi));
  }
}

TEST_CASE("controller guard", "[controller]") {
  ControllerConfig cfg;
  PlantState s;
  s.x3 = {0.0, 0.1};
  CHECK_THROWS_AS(evaluate_controller(s, {}, {0, 0}, cfg), SingularInputMap);
  CHECK_THROWS_AS(rate_command(s, {}, {0, 0}, cfg), SingularInputMap);
  CHECK_THROWS_AS(compute_control(s, {}, {0, 0}, cfg), SingularInputMap);
  cfg.eps_f = 1.0;
  s.x3 = {0.99, 0.0};
  CHECK_THROWS_AS(compute_control(s, {}, {0, 0}, cfg), SingularInputMap);
}

TEST_CASE("config validation", "[controller]") {
  ControllerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.k3 = 0.0;
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.sign_inv_mass = 0.5;
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.alpha2 = -1.0;
  CHECK_THROWS(bad.validate());
  bad = cfg;
  bad.eps_f = 0.0;
  CHECK_THROWS(bad.validate());
}
