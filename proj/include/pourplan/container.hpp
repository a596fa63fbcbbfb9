#pragma once

// Container geometry: open 2D vessels described by an interior polygon, a
// sphere sampling of their walls, and the opening/lip landmarks used by the
// pouring logic.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pourplan/config.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/geometry.hpp"

namespace pourplan {

enum class ShapeTag { Rectangular, Conic, Curved };

inline std::string shape_name(ShapeTag t) {
  switch (t) {
    case ShapeTag::Rectangular: return "rect";
    case ShapeTag::Conic: return "conic";
    case ShapeTag::Curved: return "curved";
  }
  return "rect";
}

inline ShapeTag parse_shape(const std::string& s) {
  if (s == "rect" || s == "rectangular") return ShapeTag::Rectangular;
  if (s == "conic") return ShapeTag::Conic;
  if (s == "curved") return ShapeTag::Curved;
  throw FileFormatError("unknown shape '" + s + "'");
}

struct Container {
  ShapeTag shape_tag = ShapeTag::Rectangular;
  std::vector<Sphere> local_spheres;   // wall sampling, radius = half thickness
  Vec2 lip_point_local;                // on the interior boundary
  Vec2 opening_center_local;
  double opening_half_width = 0.0;
  std::vector<Vec2> interior_poly;     // simple polygon, local frame

  Aabb interior_bounds;                // cached from interior_poly

  double interior_floor_y() const { return interior_bounds.lo.y; }
  double interior_height() const { return interior_bounds.hi.y - interior_bounds.lo.y; }

  bool contains_local(Vec2 p) const { return point_in_polygon(interior_poly, p); }
  bool contains_world(Vec2 world, Pose2 pose) const {
    return contains_local(pose.to_local(world));
  }
  // Opening segment endpoints in world coordinates.
  std::pair<Vec2, Vec2> opening_world(Pose2 pose) const {
    const Vec2 a = opening_center_local - Vec2{opening_half_width, 0.0};
    const Vec2 b = opening_center_local + Vec2{opening_half_width, 0.0};
    return {pose.to_world(a), pose.to_world(b)};
  }
};

enum class ContainerOrigin { Lip, Floor, HoverAboveOpening };

namespace detail {

// Spheres of radius `radius` along [a, b] at spacing <= radius, inclusive of
// both endpoints. Near-duplicates against `out.back()` are skipped.
inline void sample_segment(Vec2 a, Vec2 b, double radius, std::vector<Sphere>& out) {
  const double len = norm(b - a);
  const int n = std::max(1, static_cast<int>(std::ceil(len / radius)));
  for (int i = 0; i <= n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / n);
    if (!out.empty() && norm(p - out.back().center) < 1e-9) continue;
    out.push_back({p, radius});
  }
}

// Offsets each segment of the open boundary path outward by half the wall
// thickness (interior lies to the left of the walk) and samples spheres
// along the resulting centerlines.
inline std::vector<Sphere> sample_walls(const std::vector<Vec2>& path, double thickness) {
  std::vector<Sphere> out;
  const double r = 0.5 * thickness;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i], b = path[i + 1];
    const Vec2 d = (b - a) / norm(b - a);
    const Vec2 outward{d.y, -d.x};
    sample_segment(a + outward * r, b + outward * r, r, out);
  }
  return out;
}

// Boundary walk of the interior in the lip frame (origin at the top-left
// interior corner, interior spanning x in [0,w], y in [-h,0], opening on
// top). Runs lip -> left wall -> floor -> right wall -> far top corner.
inline std::vector<Vec2> boundary_path_lip_frame(ShapeTag tag, double w, double h,
                                                 const SceneConfig& cfg) {
  std::vector<Vec2> path;
  switch (tag) {
    case ShapeTag::Rectangular:
      path = {{0.0, 0.0}, {0.0, -h}, {w, -h}, {w, 0.0}};
      break;
    case ShapeTag::Conic: {
      const double in = std::min(cfg.conic_taper, 0.45 * w);
      path = {{0.0, 0.0}, {in, -h}, {w - in, -h}, {w, 0.0}};
      break;
    }
    case ShapeTag::Curved: {
      // Circular side walls with sagitta `bulge` at mid-height.
      const double b = cfg.curve_bulge;
      const double rad = (0.25 * h * h + b * b) / (2.0 * b);
      const int steps = 10;
      // `inward` is +1 when the circle center lies to +x of the wall.
      auto arc = [&](Vec2 top, Vec2 bottom, double inward, std::vector<Vec2>& dst) {
        const Vec2 c{top.x + inward * (rad - b), -0.5 * h};
        const double a0 = std::atan2(top.y - c.y, top.x - c.x);
        const double a1 = std::atan2(bottom.y - c.y, bottom.x - c.x);
        double sweep = a1 - a0;
        while (sweep > kPi) sweep -= 2.0 * kPi;
        while (sweep < -kPi) sweep += 2.0 * kPi;
        for (int i = 0; i <= steps; ++i) {
          const double a = a0 + sweep * (static_cast<double>(i) / steps);
          dst.push_back({c.x + rad * std::cos(a), c.y + rad * std::sin(a)});
        }
      };
      arc({0.0, 0.0}, {0.0, -h}, +1.0, path);  // left wall bulges to -x
      std::vector<Vec2> right;
      arc({w, -h}, {w, 0.0}, -1.0, right);     // right wall bulges to +x
      path.insert(path.end(), right.begin(), right.end());
      break;
    }
  }
  return path;
}

}  // namespace detail

// Builds an open box. The boundary path doubles as the interior polygon
// (the opening edge closes it implicitly).
inline Container make_container(ShapeTag tag, double interior_width, double interior_height,
                                ContainerOrigin origin, const SceneConfig& cfg) {
  const double w = interior_width, h = interior_height;
  std::vector<Vec2> path = detail::boundary_path_lip_frame(tag, w, h, cfg);

  Container c;
  c.shape_tag = tag;
  c.local_spheres = detail::sample_walls(path, cfg.wall_thickness);
  c.interior_poly = path;
  c.lip_point_local = {0.0, 0.0};
  c.opening_center_local = {0.5 * w, 0.0};
  c.opening_half_width = 0.5 * w;

  Vec2 shift{0.0, 0.0};  // lip-frame coordinates of the requested origin
  switch (origin) {
    case ContainerOrigin::Lip: break;
    case ContainerOrigin::Floor: shift = {0.5 * w, -h}; break;
    case ContainerOrigin::HoverAboveOpening: shift = {0.5 * w, cfg.target_hover_clearance}; break;
  }
  for (Vec2& p : c.interior_poly) p -= shift;
  for (Sphere& s : c.local_spheres) s.center -= shift;
  c.lip_point_local -= shift;
  c.opening_center_local -= shift;

  c.interior_bounds = polygon_bounds(c.interior_poly);
  return c;
}

// Canonical source: origin at the lip so the pose rotates about the spout,
// and a counterclockwise tip pours toward -x.
inline Container make_source_container(ShapeTag tag, const SceneConfig& cfg) {
  return make_container(tag, cfg.source_interior_width, cfg.source_interior_height,
                        ContainerOrigin::Lip, cfg);
}

// Canonical target: origin hovers above the opening center so a vanishing
// pose gap is a pourable configuration.
inline Container make_target_container(ShapeTag tag, const SceneConfig& cfg) {
  return make_container(tag, cfg.target_interior_width, cfg.target_interior_height,
                        ContainerOrigin::HoverAboveOpening, cfg);
}

}  // namespace pourplan
