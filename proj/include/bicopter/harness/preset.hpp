#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bicopter/config.hpp"
#include "bicopter/model.hpp"
#include "bicopter/sim.hpp"
#include "bicopter/trajectory.hpp"

namespace bicopter::harness {

enum class ReferenceKind { Constant, Ellipse, Hilbert };

inline const char* to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::Constant: return "constant";
    case ReferenceKind::Ellipse: return "ellipse";
    case ReferenceKind::Hilbert: return "hilbert";
  }
  return "?";
}

struct HilbertDef {
  int order{2};
  double side{4.0};  // [m]
  Vec2 origin;       // lower-left corner [m]
  double v_max{1.0};
  double a_max{1.0};
  double settle{10.0};  // run time past the end of the trajectory [s]
};

struct ReferenceDef {
  ReferenceKind kind{ReferenceKind::Constant};
  Vec2 point;  // constant reference
  EllipseConfig ellipse;
  HilbertDef hilbert;
};

inline std::vector<Vec2> hilbert_points(const HilbertDef& h) {
  auto pts = hilbert_waypoints(h.order, h.side);
  for (auto& p : pts) p += h.origin;
  return pts;
}

inline Reference build_reference(const ReferenceDef& ref) {
  switch (ref.kind) {
    case ReferenceKind::Constant: return Reference{ConstantReference{ref.point}};
    case ReferenceKind::Ellipse:
      ref.ellipse.validate();
      return Reference{ref.ellipse};
    case ReferenceKind::Hilbert:
      return Reference{time_parameterize(hilbert_points(ref.hilbert), ref.hilbert.v_max,
                                         ref.hilbert.a_max)};
  }
  return Reference{};
}

/// A complete, reproducible experiment description.
struct Preset {
  std::string name;
  std::string description;
  ReferenceDef reference;
  ControllerConfig cfg;
  EstimatorState initial_estimates;
  PhysicalParams params;
  double initial_thrust{9.81};  // F(0) [N]
  double dt{1e-3};
  std::optional<double> duration;  // unset: 120 s, or trajectory + settle for Hilbert
  std::size_t output_stride{1};
  std::uint64_t seed{1};
};

inline double resolved_duration(const Preset& p) {
  if (p.duration) return *p.duration;
  if (p.reference.kind == ReferenceKind::Hilbert) {
    const auto traj = time_parameterize(hilbert_points(p.reference.hilbert), p.reference.hilbert.v_max,
                                        p.reference.hilbert.a_max);
    return traj.duration + p.reference.hilbert.settle;
  }
  return 120.0;
}

/// Simulation inputs for a preset. The vehicle starts on the reference, at
/// rest, level, with thrust initial_thrust.
inline std::pair<SimSetup, Reference> make_setup(const Preset& p) {
  Reference ref = build_reference(p.reference);
  SimSetup s;
  s.cfg = p.cfg;
  s.params = p.params;
  s.dt = p.dt;
  s.duration = resolved_duration(p);
  s.output_stride = p.output_stride;
  s.initial.plant.x1 = ref.position(0.0);
  s.initial.plant.x3 = {p.initial_thrust, 0.0};
  s.initial.est = p.initial_estimates;
  return {s, std::move(ref)};
}

inline SimResult simulate_preset(const Preset& p) {
  auto [setup, ref] = make_setup(p);
  return simulate(setup, ref);
}

inline void set_estimator_gains(ControllerConfig& cfg, double g) {
  cfg.gamma1 = cfg.gamma2 = cfg.alpha1 = cfg.alpha2 = g;
}

inline std::vector<Preset> builtin_presets() {
  std::vector<Preset> out;

  Preset ellipse;
  ellipse.reference.kind = ReferenceKind::Ellipse;
  ellipse.duration = 120.0;

  Preset es = ellipse;
  es.name = "ellipse-slow";
  es.description = "tilted 5 m x 3 m ellipse, estimator gains 0.1";
  set_estimator_gains(es.cfg, 0.1);
  out.push_back(es);

  // Gains of 1 make the initial transient stiff enough that RK4 at 1 ms diverges.
  Preset ef = ellipse;
  ef.name = "ellipse-fast";
  ef.description = "tilted 5 m x 3 m ellipse, estimator gains 1";
  set_estimator_gains(ef.cfg, 1.0);
  ef.dt = 2.5e-4;
  out.push_back(ef);

  Preset hilbert;
  hilbert.reference.kind = ReferenceKind::Hilbert;

  Preset hs = hilbert;
  hs.name = "hilbert-slow";
  hs.description = "order-2 Hilbert path, 4 m square, v_max = a_max = 1, estimator gains 0.1";
  set_estimator_gains(hs.cfg, 0.1);
  out.push_back(hs);

  Preset hf = hilbert;
  hf.name = "hilbert-fast";
  hf.description = "order-2 Hilbert path, 4 m square, v_max = a_max = 1, estimator gains 1";
  set_estimator_gains(hf.cfg, 1.0);
  hf.dt = 2.5e-4;
  out.push_back(hf);

  Preset reg;
  reg.name = "regulation";
  reg.description = "hold (1, 1) m, estimator gains 0.1";
  reg.reference.kind = ReferenceKind::Constant;
  reg.reference.point = {1.0, 1.0};
  reg.duration = 120.0;
  out.push_back(reg);

  Preset guard;
  guard.name = "guard-trip";
  guard.description = "wrong sign of 1/m drives thrust to zero; eps_F = 0.5 N";
  guard.reference.kind = ReferenceKind::Constant;
  guard.cfg.sign_inv_mass = -1.0;
  guard.cfg.eps_f = 0.5;
  guard.duration = 20.0;
  out.push_back(guard);

  return out;
}

inline std::optional<Preset> find_preset(const std::string& name) {
  for (auto& p : builtin_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

}  // namespace bicopter::harness
