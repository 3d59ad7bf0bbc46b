#pragma once

#include <cmath>

namespace hypersam {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double norm_sq() const { return x * x + y * y; }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// 2D cross product (determinant of [a b]).
constexpr double det(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline Vec2 normalized(const Vec2& v) {
  const double n = v.norm();
  return n > 0.0 ? v / n : Vec2{};
}

// Scales v down so that its norm does not exceed max_norm; direction is kept.
inline Vec2 clamp_norm(const Vec2& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm && n > 0.0 ? v * (max_norm / n) : v;
}

}  // namespace hypersam
