#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bicopter/linalg.hpp"

namespace bicopter {

// ---------------------------------------------------------------------------
// Elliptical reference
// ---------------------------------------------------------------------------

/// Tilted ellipse starting at the origin:
///   r1 = a cos(psi) - a cos(psi) cos(w t) - b sin(psi) sin(w t)
///   r2 = a sin(psi) - a sin(psi) cos(w t) + b cos(psi) sin(w t)
struct EllipseConfig {
  double psi{std::numbers::pi / 4.0};  // tilt [rad]
  double omega{0.1};                   // [rad/s]
  double a{5.0};                       // [m]
  double b{3.0};                       // [m]

  void validate() const {
    if (!(omega > 0.0) || !(a > 0.0) || !(b > 0.0)) {
      throw std::invalid_argument("EllipseConfig: need omega, a, b > 0");
    }
  }
};

inline Vec2 ellipse_ref(double t, const EllipseConfig& e) {
  const double cp = std::cos(e.psi), sp = std::sin(e.psi);
  const double cw = std::cos(e.omega * t), sw = std::sin(e.omega * t);
  return {e.a * cp - e.a * cp * cw - e.b * sp * sw, e.a * sp - e.a * sp * cw + e.b * cp * sw};
}

inline Vec2 ellipse_ref_rate(double t, const EllipseConfig& e) {
  const double cp = std::cos(e.psi), sp = std::sin(e.psi);
  const double cw = std::cos(e.omega * t), sw = std::sin(e.omega * t);
  const double w = e.omega;
  return {w * (e.a * cp * sw - e.b * sp * cw), w * (e.a * sp * sw + e.b * cp * cw)};
}

// ---------------------------------------------------------------------------
// Hilbert waypoints
// ---------------------------------------------------------------------------

namespace detail {

/// Cell (x, y) of index d along the Hilbert curve on an n x n grid, n a power of two.
inline std::pair<long, long> hilbert_cell(long n, long d) {
  long x = 0, y = 0;
  for (long s = 1; s < n; s *= 2) {
    const long rx = 1 & (d / 2);
    const long ry = 1 & (d ^ rx);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
    x += s * rx;
    y += s * ry;
    d /= 4;
  }
  return {x, y};
}

}  // namespace detail

/// Vertices of the Hilbert curve of the given order, in curve order, on a
/// 2^order x 2^order grid spanning [0, side]^2 with pitch side / (2^order - 1).
inline std::vector<Vec2> hilbert_waypoints(int order, double side) {
  if (order < 1 || order > 15) throw std::invalid_argument("hilbert_waypoints: order must be in [1, 15]");
  if (!(side > 0.0)) throw std::invalid_argument("hilbert_waypoints: side must be > 0");
  const long n = 1L << order;
  const double pitch = side / static_cast<double>(n - 1);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n * n));
  for (long d = 0; d < n * n; ++d) {
    const auto [cx, cy] = detail::hilbert_cell(n, d);
    out.push_back({pitch * static_cast<double>(cx), pitch * static_cast<double>(cy)});
  }
  return out;
}

/// Writes "index,x,y" rows with a header.
inline void write_waypoints_csv(std::ostream& os, const std::vector<Vec2>& pts) {
  os << "index,x,y\n" << std::setprecision(9);
  for (std::size_t i = 0; i < pts.size(); ++i) os << i << ',' << pts[i].x << ',' << pts[i].y << '\n';
}

// ---------------------------------------------------------------------------
// Rest-to-rest piecewise-linear trajectory
// ---------------------------------------------------------------------------

/// One straight segment traversed with a trapezoidal (or triangular) speed
/// profile that starts and ends at rest.
struct TrajectorySegment {
  double start_time{0.0};
  Vec2 start;
  Vec2 direction;  // unit
  double length{0.0};
  double accel_time{0.0};
  double cruise_time{0.0};
  double peak_speed{0.0};
  double accel{0.0};

  double duration() const { return 2.0 * accel_time + cruise_time; }

  /// Arc length travelled after tau seconds in this segment.
  double distance(double tau) const {
    if (tau <= 0.0) return 0.0;
    const double total = duration();
    if (tau >= total) return length;
    if (tau < accel_time) return 0.5 * accel * tau * tau;
    if (tau < accel_time + cruise_time) {
      return 0.5 * accel * accel_time * accel_time + peak_speed * (tau - accel_time);
    }
    const double rem = total - tau;
    return length - 0.5 * accel * rem * rem;
  }

  double speed(double tau) const {
    if (tau <= 0.0 || tau >= duration()) return 0.0;
    if (tau < accel_time) return accel * tau;
    if (tau < accel_time + cruise_time) return peak_speed;
    return accel * (duration() - tau);
  }
};

/// Closed-form rest-to-rest duration of a straight move of length L.
inline double trapezoid_duration(double length, double v_max, double a_max) {
  if (length >= v_max * v_max / a_max) return length / v_max + v_max / a_max;
  return 2.0 * std::sqrt(length / a_max);
}

struct PiecewiseTrajectory {
  std::vector<TrajectorySegment> segments;
  Vec2 first;
  Vec2 last;
  double duration{0.0};
};

/// Builds a rest-to-rest velocity/acceleration-limited timing for a polyline.
/// Zero-length segments are skipped.
inline PiecewiseTrajectory time_parameterize(const std::vector<Vec2>& waypoints, double v_max,
                                             double a_max) {
  if (!(v_max > 0.0) || !(a_max > 0.0)) {
    throw std::invalid_argument("time_parameterize: v_max and a_max must be > 0");
  }
  if (waypoints.size() < 2) throw std::invalid_argument("time_parameterize: need >= 2 waypoints");

  PiecewiseTrajectory traj;
  traj.first = waypoints.front();
  traj.last = waypoints.back();
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec2 delta = waypoints[i + 1] - waypoints[i];
    const double length = norm(delta);
    if (length == 0.0) continue;
    TrajectorySegment seg;
    seg.start_time = t;
    seg.start = waypoints[i];
    seg.direction = (1.0 / length) * delta;
    seg.length = length;
    seg.accel = a_max;
    if (length >= v_max * v_max / a_max) {
      seg.accel_time = v_max / a_max;
      seg.peak_speed = v_max;
      seg.cruise_time = length / v_max - v_max / a_max;
    } else {
      seg.accel_time = std::sqrt(length / a_max);
      seg.peak_speed = a_max * seg.accel_time;
      seg.cruise_time = 0.0;
    }
    t += seg.duration();
    traj.segments.push_back(seg);
  }
  traj.duration = t;
  return traj;
}

namespace detail {

inline const TrajectorySegment* find_segment(const PiecewiseTrajectory& traj, double t) {
  if (traj.segments.empty() || t < 0.0 || t >= traj.duration) return nullptr;
  // Last segment whose start_time <= t.
  std::size_t lo = 0, hi = traj.segments.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (traj.segments[mid].start_time <= t) lo = mid; else hi = mid;
  }
  return &traj.segments[lo];
}

}  // namespace detail

/// Position at time t, clamped to the first waypoint before 0 and to the last
/// one after the end.
inline Vec2 sample(const PiecewiseTrajectory& traj, double t) {
  if (t < 0.0) return traj.first;
  const TrajectorySegment* seg = detail::find_segment(traj, t);
  if (seg == nullptr) return traj.last;
  return seg->start + seg->distance(t - seg->start_time) * seg->direction;
}

inline Vec2 sample_rate(const PiecewiseTrajectory& traj, double t) {
  const TrajectorySegment* seg = detail::find_segment(traj, t);
  if (seg == nullptr) return {};
  return seg->speed(t - seg->start_time) * seg->direction;
}

inline double path_length(const PiecewiseTrajectory& traj) {
  double total = 0.0;
  for (const auto& s : traj.segments) total += s.length;
  return total;
}

// ---------------------------------------------------------------------------
// Reference dispatch
// ---------------------------------------------------------------------------

struct ConstantReference {
  Vec2 point;
};

/// Position reference consumed by the simulation. Rates are exposed for the
/// Lyapunov monitor only; the controller never sees them.
class Reference {
 public:
  using Variant = std::variant<ConstantReference, EllipseConfig, PiecewiseTrajectory>;

  Reference() : impl_(ConstantReference{}) {}
  Reference(ConstantReference c) : impl_(c) {}
  Reference(EllipseConfig e) : impl_(e) {}
  Reference(PiecewiseTrajectory p) : impl_(std::move(p)) {}

  Vec2 position(double t) const {
    return std::visit(
        [t](const auto& r) -> Vec2 {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, ConstantReference>) return r.point;
          else if constexpr (std::is_same_v<T, EllipseConfig>) return ellipse_ref(t, r);
          else return sample(r, t);
        },
        impl_);
  }

  Vec2 velocity(double t) const {
    return std::visit(
        [t](const auto& r) -> Vec2 {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, ConstantReference>) return {};
          else if constexpr (std::is_same_v<T, EllipseConfig>) return ellipse_ref_rate(t, r);
          else return sample_rate(r, t);
        },
        impl_);
  }

  Vec2 operator()(double t) const { return position(t); }

  const Variant& variant() const { return impl_; }

 private:
  Variant impl_;
};

}  // namespace bicopter
