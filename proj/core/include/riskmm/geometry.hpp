#pragma once

#include <array>
#include <cmath>

namespace riskmm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline double wrap_angle(double a) {
  // Wrap to (-pi, pi].
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

/// Oriented rectangle: center, full extents, yaw (radians, world frame).
/// `length` runs along the yaw direction, `width` across it.
struct OrientedBox {
  Vec2 center;
  double length = 0.0;
  double width = 0.0;
  double yaw = 0.0;

  /// Corner order: front-left, front-right, rear-right, rear-left.
  std::array<Vec2, 4> corners() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Vec2 fwd{c * length * 0.5, s * length * 0.5};
    const Vec2 left{-s * width * 0.5, c * width * 0.5};
    return {Vec2{center + fwd + left}, Vec2{center + fwd - left},
            Vec2{center - fwd - left}, Vec2{center - fwd + left}};
  }

  /// Strict interior test (boundary points excluded).
  bool contains(const Vec2& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Vec2 d = p - center;
    const double u = c * d.x + s * d.y;   // along length
    const double v = -s * d.x + c * d.y;  // along width
    return std::abs(u) < length * 0.5 && std::abs(v) < width * 0.5;
  }

  double area() const { return length * width; }
};

}  // namespace riskmm
