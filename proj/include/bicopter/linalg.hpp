#pragma once

#include <cmath>
#include <cstddef>

namespace bicopter {

/// Two-component real vector. Units depend on what it carries.
struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr double operator[](std::size_t i) const { return i == 0 ? x : y; }

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double squared_norm(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// 2x2 real matrix stored row-major: [[m00, m01], [m10, m11]].
struct Mat2 {
  double m00{0.0};
  double m01{0.0};
  double m10{0.0};
  double m11{0.0};

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr double operator()(std::size_t r, std::size_t c) const {
    return r == 0 ? (c == 0 ? m00 : m01) : (c == 0 ? m10 : m11);
  }

  constexpr double det() const { return m00 * m11 - m01 * m10; }
  constexpr Mat2 transposed() const { return {m00, m10, m01, m11}; }

  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
  return {a.m00 + b.m00, a.m01 + b.m01, a.m10 + b.m10, a.m11 + b.m11};
}
constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
  return {a.m00 - b.m00, a.m01 - b.m01, a.m10 - b.m10, a.m11 - b.m11};
}
constexpr Mat2 operator-(const Mat2& a) { return {-a.m00, -a.m01, -a.m10, -a.m11}; }
constexpr Mat2 operator*(double s, const Mat2& a) {
  return {s * a.m00, s * a.m01, s * a.m10, s * a.m11};
}
constexpr Vec2 operator*(const Mat2& a, const Vec2& v) {
  return {a.m00 * v.x + a.m01 * v.y, a.m10 * v.x + a.m11 * v.y};
}
constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
          a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

/// Largest absolute entry.
inline double max_abs(const Mat2& a) {
  return std::fmax(std::fmax(std::fabs(a.m00), std::fabs(a.m01)),
                   std::fmax(std::fabs(a.m10), std::fabs(a.m11)));
}

inline bool is_finite(const Mat2& a) {
  return std::isfinite(a.m00) && std::isfinite(a.m01) && std::isfinite(a.m10) &&
         std::isfinite(a.m11);
}

}  // namespace bicopter
