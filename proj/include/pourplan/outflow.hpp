#pragma once

// Ballistic outflow-curve extraction from a short window of rollout frames.
// Particles that left the source during the window and are still above the
// target opening trace the stream; the curve q(s) = p + v*s + (0,-g/2)*s^2
// starts at the source lip (p fixed there) and v is found by alternating
// least squares over v with per-point curve-parameter assignment, restricted
// greedily to inliers near the current curve. Flux rho counts leavers per
// frame relative to the whole particle population; rho = -1 encodes "no
// outflow".

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pourplan/container.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/reward.hpp"

namespace pourplan {

struct OutflowCurve {
  Vec2 p_local;  // stream start in the source local frame (the lip)
  Vec2 v;        // leaving velocity, world frame
  double rho = -1.0;
};

namespace detail {

// Squared distance from x to the curve at parameter s.
inline double curve_dist_sq(Vec2 p, Vec2 v, double g, double s, Vec2 x) {
  const Vec2 q{p.x + v.x * s, p.y + v.y * s - 0.5 * g * s * s};
  return norm_sq(q - x);
}

// Nearest curve parameter to x in [0, s_max], polished by Newton steps from
// a coarse scan (the objective is quartic in s; the scan avoids the wrong
// basin).
inline double nearest_curve_param(Vec2 p, Vec2 v, double g, Vec2 x, double s_max) {
  double best_s = 0.0;
  double best_d = curve_dist_sq(p, v, g, 0.0, x);
  for (int k = 1; k <= 40; ++k) {
    const double s = s_max * k / 40.0;
    const double d = curve_dist_sq(p, v, g, s, x);
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  double s = best_s;
  for (int it = 0; it < 8; ++it) {
    const Vec2 q{p.x + v.x * s, p.y + v.y * s - 0.5 * g * s * s};
    const Vec2 dq{v.x, v.y - g * s};
    const Vec2 r = q - x;
    const double grad = 2.0 * dot(r, dq);
    const double hess = 2.0 * (norm_sq(dq) + r.y * -g);
    if (hess <= 1e-12) break;
    s = std::clamp(s - grad / hess, 0.0, s_max);
  }
  return s;
}

}  // namespace detail

inline OutflowCurve fit_outflow_curve(std::span<const TraceFrame> window,
                                      const Container& source, double target_opening_y,
                                      double g, double particle_spacing,
                                      double rho_scale = 0.01) {
  if (window.size() < 2)
    throw std::invalid_argument("fit_outflow_curve: window needs >= 2 frames");
  const TraceFrame& first = window.front();
  const TraceFrame& last = window.back();
  const std::size_t n = last.state.particles.size();

  OutflowCurve curve;
  curve.p_local = source.lip_point_local;
  curve.v = Vec2{0.0, 0.0};
  curve.rho = -1.0;

  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 now = last.state.particles[i].position;
    if (source.contains_world(now, last.source_pose)) continue;
    if (!source.contains_world(first.state.particles[i].position, first.source_pose)) continue;
    if (now.y <= target_opening_y) continue;
    pts.push_back(now);
  }
  if (pts.empty()) return curve;

  const double frames_elapsed = static_cast<double>(window.size() - 1);
  curve.rho = std::min(1.0, (pts.size() / frames_elapsed) /
                                (static_cast<double>(n) * rho_scale));

  const Vec2 p = last.source_pose.to_world(source.lip_point_local);
  const double s_max = 5.0;
  std::vector<double> s(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    s[i] = std::sqrt(std::max(0.0, 2.0 * (p.y - pts[i].y) / g));

  std::vector<char> inlier(pts.size(), 1);
  Vec2 v{0.0, 0.0};
  const double band = 1.5 * particle_spacing;
  for (int round = 0; round < 10; ++round) {
    // Least squares over v on the current inliers. Eliminating the per-point
    // curve parameter through the x-equation (s = dx/vx) makes the curve
    // constraint linear in (vx^2, vx*vy), so points on one ballistic arc
    // determine v exactly; alternating projection alone crawls along the
    // (v, s) valley and stalls short of the arc.
    {
      double saa = 0.0, sab = 0.0, sbb = 0.0, sac = 0.0, sbc = 0.0, sdx = 0.0;
      std::size_t m = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!inlier[i]) continue;
        const double dxi = pts[i].x - p.x;
        const double dyi = pts[i].y - p.y;
        const double a = dyi, b = -dxi, c = -0.5 * g * dxi * dxi;
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sac += a * c;
        sbc += b * c;
        sdx += dxi;
        ++m;
      }
      const double det = saa * sbb - sab * sab;
      if (m >= 2 && std::abs(det) > 1e-18) {
        const double A = (sac * sbb - sbc * sab) / det;
        const double B = (saa * sbc - sab * sac) / det;
        if (A > 0.0) {
          const double vx = (sdx < 0.0 ? -1.0 : 1.0) * std::sqrt(A);
          v = Vec2{vx, B / vx};
          for (std::size_t i = 0; i < pts.size(); ++i)
            s[i] = detail::nearest_curve_param(p, v, g, pts[i], s_max);
        }
      }
    }
    // Alternate closed-form least squares over v with nearest-parameter
    // reassignment to polish the geometric fit on the inlier set.
    for (int it = 0; it < 25; ++it) {
      double sxx = 0.0, bx = 0.0, by = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!inlier[i]) continue;
        sxx += s[i] * s[i];
        bx += s[i] * (pts[i].x - p.x);
        by += s[i] * (pts[i].y - p.y + 0.5 * g * s[i] * s[i]);
      }
      if (sxx <= 1e-12) break;
      const Vec2 v_new{bx / sxx, by / sxx};
      const double dv = norm(v_new - v);
      v = v_new;
      for (std::size_t i = 0; i < pts.size(); ++i)
        s[i] = detail::nearest_curve_param(p, v, g, pts[i], s_max);
      if (dv <= 1e-10 * (1.0 + norm(v))) break;
    }

    bool changed = false;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const char in =
          detail::curve_dist_sq(p, v, g, s[i], pts[i]) <= band * band ? 1 : 0;
      if (in != inlier[i]) changed = true;
      inlier[i] = in;
      kept += in;
    }
    if (kept < 2) break;  // fit collapsed; keep the last v
    if (!changed) break;
  }
  curve.v = v;
  return curve;
}

}  // namespace pourplan
