#include "audionav/geometry.hpp"

#include <algorithm>

namespace audionav {

double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double wrap_pi(double angle) {
  double w = std::fmod(angle + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= kPi;
  if (w <= -kPi) w += kTwoPi;
  return w;
}

std::optional<SegmentHit> intersect_segments(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const Vec2 r = p1 - p0;
  const Vec2 s = q1 - q0;
  const double denom = cross(r, s);
  const double scale = std::max({r.norm() * s.norm(), 1e-300});
  if (std::abs(denom) <= 1e-14 * scale) {
    return std::nullopt;  // parallel or collinear
  }
  const Vec2 qp = q0 - p0;
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  constexpr double tol = 1e-12;
  if (t < -tol || t > 1.0 + tol || u < -tol || u > 1.0 + tol) return std::nullopt;
  return SegmentHit{std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0)};
}

std::optional<double> ray_hits_segment(Vec2 origin, Vec2 dir, const Segment& seg) {
  const Vec2 s = seg.direction();
  const double denom = cross(dir, s);
  if (std::abs(denom) <= 1e-14 * std::max(dir.norm() * s.norm(), 1e-300)) return std::nullopt;
  const Vec2 qp = seg.a - origin;
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, dir) / denom;
  if (t < 0.0 || u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  return t;
}

double point_segment_distance(Vec2 p, const Segment& seg) {
  const Vec2 d = seg.direction();
  const double len2 = dot(d, d);
  if (len2 == 0.0) return distance(p, seg.a);
  const double t = std::clamp(dot(p - seg.a, d) / len2, 0.0, 1.0);
  return distance(p, seg.a + d * t);
}

Vec2 reflect_across(Vec2 p, const Segment& seg) {
  const Vec2 d = seg.direction();
  const double t = dot(p - seg.a, d) / dot(d, d);
  const Vec2 foot = seg.a + d * t;
  return foot * 2.0 - p;
}

double signed_area(std::span<const Vec2> corners) {
  double acc = 0.0;
  const std::size_t n = corners.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross(corners[i], corners[(i + 1) % n]);
  }
  return 0.5 * acc;
}

bool is_simple_polygon(std::span<const Vec2> corners) {
  const std::size_t n = corners.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (distance(corners[i], corners[j]) < 1e-9) return false;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a0 = corners[i];
    const Vec2 a1 = corners[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const Vec2 b0 = corners[j];
      const Vec2 b1 = corners[(j + 1) % n];
      if (intersect_segments(a0, a1, b0, b1)) return false;
      // collinear overlap is missed by the crossing test
      if (point_segment_distance(b0, {a0, a1}) < 1e-12 ||
          point_segment_distance(a0, {b0, b1}) < 1e-12) {
        return false;
      }
    }
  }
  // adjacent edges folding back onto each other
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 prev = corners[(i + n - 1) % n];
    const Vec2 cur = corners[i];
    const Vec2 next = corners[(i + 1) % n];
    const Vec2 e0 = cur - prev;
    const Vec2 e1 = next - cur;
    if (std::abs(cross(e0, e1)) <= 1e-12 * e0.norm() * e1.norm() && dot(e0, e1) < 0.0) {
      return false;
    }
  }
  return std::abs(signed_area(corners)) > 1e-12;
}

bool polygon_contains(std::span<const Vec2> corners, Vec2 p) {
  bool inside = false;
  const std::size_t n = corners.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = corners[i];
    const Vec2 b = corners[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

} // namespace audionav
