#pragma once

#include <cmath>
#include <numbers>

namespace coopred {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  if (a > pi) a -= 2.0 * pi;
  return a;
}

/// Local coordinate system of a graph node: origin and orientation in the
/// global frame. Positions/headings of everything attached to the node are
/// expressed relative to this frame.
struct ReferenceFrame {
  double x_ref = 0.0;
  double y_ref = 0.0;
  double theta_ref = 0.0;  // in (-pi, pi]
};

/// Rigid transform taking the source frame into the destination frame:
/// (dx, dy) is the source origin expressed in destination coordinates,
/// dtheta = wrap(theta_src - theta_dst).
struct RelativePose {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
};

/// Expresses a global point in `frame` coordinates.
inline Vec2 global_to_local(const Vec2& p, const ReferenceFrame& f) {
  const double c = std::cos(f.theta_ref), s = std::sin(f.theta_ref);
  const double px = p.x - f.x_ref, py = p.y - f.y_ref;
  return {c * px + s * py, -s * px + c * py};
}

/// Inverse of global_to_local.
inline Vec2 local_to_global(const Vec2& p, const ReferenceFrame& f) {
  const double c = std::cos(f.theta_ref), s = std::sin(f.theta_ref);
  return {f.x_ref + c * p.x - s * p.y, f.y_ref + s * p.x + c * p.y};
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 <= 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::fmax(0.0, std::fmin(1.0, t));
  return (p - (a + ab * t)).norm();
}

}  // namespace coopred
