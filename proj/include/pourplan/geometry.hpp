#pragma once

// Planar geometry shared across the library: vectors, rigid poses, sphere
// sets for collision queries, and simple polygon tests.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace pourplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  Vec2 operator-() const { return {-x, -y}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm_sq(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::sqrt(norm_sq(v)); }

// Counterclockwise rotation by `angle` radians.
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Planar rigid pose. theta is a counterclockwise rotation about the local
// origin; container poses keep theta within [0, theta_max].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 to_world(Vec2 local) const { return position() + rotate(local, theta); }
  Vec2 to_local(Vec2 world) const { return rotate(world - position(), -theta); }
  Vec2 direction_to_world(Vec2 local) const { return rotate(local, theta); }

  // Componentwise affine arithmetic; used where poses act as plain triples
  // (spline interpolation, difference stencils), not as rigid transforms.
  Pose2 operator+(Pose2 o) const { return {x + o.x, y + o.y, theta + o.theta}; }
  Pose2 operator-(Pose2 o) const { return {x - o.x, y - o.y, theta - o.theta}; }
  Pose2 operator*(double s) const { return {x * s, y * s, theta * s}; }
};

struct Sphere {
  Vec2 center;
  double radius = 0.0;
};

// Rotates each center by pose.theta, then translates by pose position.
inline std::vector<Sphere> transform_spheres(std::span<const Sphere> local, Pose2 pose) {
  std::vector<Sphere> out;
  out.reserve(local.size());
  for (const Sphere& s : local) out.push_back({pose.to_world(s.center), s.radius});
  return out;
}

// Maximum pairwise overlap depth, zero when the sets are separated.
inline double penetration_depth(std::span<const Sphere> a, std::span<const Sphere> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("penetration_depth: empty sphere set");

  // Bounding-circle reject: cheap exit for well-separated sets.
  auto bound = [](std::span<const Sphere> s) {
    Vec2 lo = s[0].center, hi = s[0].center;
    double r = 0.0;
    for (const Sphere& q : s) {
      lo.x = std::min(lo.x, q.center.x);
      lo.y = std::min(lo.y, q.center.y);
      hi.x = std::max(hi.x, q.center.x);
      hi.y = std::max(hi.y, q.center.y);
      r = std::max(r, q.radius);
    }
    const Vec2 c = (lo + hi) * 0.5;
    double rad = 0.0;
    for (const Sphere& q : s) rad = std::max(rad, norm(q.center - c));
    return std::pair<Vec2, double>(c, rad + r);
  };
  const auto [ca, ra] = bound(a);
  const auto [cb, rb] = bound(b);
  if (norm(ca - cb) > ra + rb) return 0.0;

  double depth = 0.0;
  for (const Sphere& p : a)
    for (const Sphere& q : b) {
      const double d = p.radius + q.radius - norm(p.center - q.center);
      if (d > depth) depth = d;
    }
  return depth;
}

struct Aabb {
  Vec2 lo;
  Vec2 hi;

  bool contains(Vec2 p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  Vec2 extent() const { return hi - lo; }
};

inline Aabb polygon_bounds(std::span<const Vec2> poly) {
  Aabb b{poly[0], poly[0]};
  for (const Vec2& p : poly) {
    b.lo.x = std::min(b.lo.x, p.x);
    b.lo.y = std::min(b.lo.y, p.y);
    b.hi.x = std::max(b.hi.x, p.x);
    b.hi.y = std::max(b.hi.y, p.y);
  }
  return b;
}

// Even-odd crossing test; points on an edge count as inside to within the
// crossing tolerance of the ray rule.
inline bool point_in_polygon(std::span<const Vec2> poly, Vec2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j], b = poly[i];
    const bool straddles = (b.y > p.y) != (a.y > p.y);
    if (straddles && p.x < (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x) inside = !inside;
  }
  return inside;
}

// Intersection of segments [a0,a1] and [b0,b1]; when they cross, writes the
// parameter along [a0,a1] to t_out and returns true. Collinear overlap and
// shared-endpoint grazing count as hits when the parameters are in range.
inline bool segments_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1, double* t_out = nullptr) {
  const Vec2 r = a1 - a0, s = b1 - b0;
  const double denom = cross(r, s);
  const Vec2 qp = b0 - a0;
  if (denom == 0.0) return false;  // parallel: treated as a miss
  const double t = cross(qp, s) / denom;
  const double u = cross(qp, r) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
  if (t_out) *t_out = t;
  return true;
}

}  // namespace pourplan
