#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace audionav {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Position plus heading in radians, counter-clockwise from +x.
struct AgentPose {
  Vec2 position;
  double heading = 0.0;
};

/// Wraps an angle to [0, 2pi).
double wrap_two_pi(double angle);
/// Wraps an angle to (-pi, pi].
double wrap_pi(double angle);

struct Segment {
  Vec2 a;
  Vec2 b;

  Vec2 direction() const { return b - a; }
  double length() const { return distance(a, b); }
};

/// Parameters of a proper crossing between segments p0->p1 and q0->q1:
/// `t` along the first, `u` along the second, both in [0, 1].
struct SegmentHit {
  double t;
  double u;
};

std::optional<SegmentHit> intersect_segments(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1);

/// Distance along a ray (origin + t * dir, t >= 0) to the first point of
/// `seg`. `dir` need not be unit length; `t` is in units of `dir`.
std::optional<double> ray_hits_segment(Vec2 origin, Vec2 dir, const Segment& seg);

double point_segment_distance(Vec2 p, const Segment& seg);

/// Mirror image of `p` across the infinite line through `seg`.
Vec2 reflect_across(Vec2 p, const Segment& seg);

/// Shoelace area; positive for counter-clockwise corner order.
double signed_area(std::span<const Vec2> corners);

/// True when no two non-adjacent edges touch and no corner repeats.
bool is_simple_polygon(std::span<const Vec2> corners);

/// Even-odd point-in-polygon test (boundary points are unspecified).
bool polygon_contains(std::span<const Vec2> corners, Vec2 p);

} // namespace audionav
