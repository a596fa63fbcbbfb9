#pragma once

// Monotone trajectory coordinates. A trajectory is encoded as five ratio
// triples (alpha, beta, gamma) in (0,1]^3: alpha and beta shrink the |x| and
// |y| gaps between source and target pose origins, gamma shrinks the
// remaining turning range theta_max - theta. Any coordinate value yields a
// trajectory that approaches the target monotonically without crossing its
// axes and never un-tips.

#include <array>
#include <cmath>

#include "pourplan/errors.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/spline.hpp"

namespace pourplan {

inline constexpr int kTransformIntervals = kControlPoints - 1;
inline constexpr int kTransformDim = 3 * kTransformIntervals;

struct TransformedCoords {
  // c[i] = (alpha, beta, gamma) for the step onto control point i+1.
  std::array<std::array<double, 3>, kTransformIntervals> c{};

  double* data() { return c[0].data(); }
  const double* data() const { return c[0].data(); }
};

// The target moves at a constant velocity and never rotates.
struct TargetTrack {
  Pose2 initial;
  Vec2 velocity;

  Pose2 at(double t) const {
    return {initial.x + velocity.x * t, initial.y + velocity.y * t, initial.theta};
  }
};

namespace detail {
inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }
}

// Decodes coordinates into control poses. Gap signs are taken from the
// initial pose; the target position is evaluated at each control point's own
// time, so the gaps are relative to where the target will be.
inline ControlPoints from_transformed(const TransformedCoords& coords, Pose2 initial,
                                      const TargetTrack& target, double theta_max,
                                      double total_time) {
  const Pose2 t0 = target.at(0.0);
  double gap_x = std::abs(initial.x - t0.x);
  double gap_y = std::abs(initial.y - t0.y);
  double tip = theta_max - initial.theta;
  if (gap_x == 0.0 || gap_y == 0.0 || tip <= 0.0)
    throw DegenerateTransform("from_transformed: zero initial gap");
  const double sx = detail::sign_of(initial.x - t0.x);
  const double sy = detail::sign_of(initial.y - t0.y);

  ControlPoints cp;
  cp.total_time = total_time;
  cp.poses[0] = initial;
  double theta = initial.theta;
  for (int i = 1; i < kControlPoints; ++i) {
    const auto& [alpha, beta, gamma] = coords.c[i - 1];
    const Pose2 ti = target.at(cp.control_time(i));
    gap_x *= alpha;
    gap_y *= beta;
    theta = theta_max - gamma * (theta_max - theta);
    cp.poses[i] = {ti.x + sx * gap_x, ti.y + sy * gap_y, theta};
  }
  return cp;
}

// Encodes control poses back into ratio coordinates. Requires weakly
// monotone gaps and turning angle; ratios are clamped into [1e-6, 1].
inline TransformedCoords to_transformed(const ControlPoints& cp, const TargetTrack& target,
                                        double theta_max) {
  TransformedCoords coords;
  const Pose2 t0 = target.at(0.0);
  double gap_x = std::abs(cp.poses[0].x - t0.x);
  double gap_y = std::abs(cp.poses[0].y - t0.y);
  double tip = theta_max - cp.poses[0].theta;
  if (gap_x == 0.0 || gap_y == 0.0 || tip <= 0.0)
    throw DegenerateTransform("to_transformed: zero initial gap");

  constexpr double kSlack = 1.0 + 1e-12;
  auto clamp_ratio = [](double r) { return std::min(1.0, std::max(1e-6, r)); };
  for (int i = 1; i < kControlPoints; ++i) {
    const Pose2 ti = target.at(cp.control_time(i));
    const double gx = std::abs(cp.poses[i].x - ti.x);
    const double gy = std::abs(cp.poses[i].y - ti.y);
    const double tp = theta_max - cp.poses[i].theta;
    if (gx > gap_x * kSlack || gy > gap_y * kSlack || tp > tip * kSlack || tp < 0.0)
      throw NotRepresentable("to_transformed: control points are not monotone");
    if (gx <= 0.0 || gy <= 0.0)
      throw NotRepresentable("to_transformed: gap reached zero");
    coords.c[i - 1] = {clamp_ratio(gx / gap_x), clamp_ratio(gy / gap_y),
                       clamp_ratio(tp / tip)};
    gap_x = gx;
    gap_y = gy;
    tip = tp;
  }
  return coords;
}

// One planner-rate step of the decoded dynamics: applies a single ratio
// triple to move from a pose at time t to a pose at time t + dt. Signs are
// carried by the caller (taken from the rollout's starting pose).
inline Pose2 step_transformed(Pose2 prev, const std::array<double, 3>& ratios,
                              Pose2 target_prev, Pose2 target_next, double theta_max,
                              double sign_x, double sign_y) {
  const double gap_x = std::abs(prev.x - target_prev.x) * ratios[0];
  const double gap_y = std::abs(prev.y - target_prev.y) * ratios[1];
  const double theta = theta_max - ratios[2] * (theta_max - prev.theta);
  return {target_next.x + sign_x * gap_x, target_next.y + sign_y * gap_y, theta};
}

}  // namespace pourplan
