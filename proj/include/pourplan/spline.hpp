#pragma once

// Six-pose interpolating trajectory. Control poses sit at i * T/5; evaluation
// is a Catmull-Rom interpolant in Hermite form with time knots, interior
// tangents from centered differences and one-sided (clamped) end tangents.
// The result passes through every control pose exactly and is C1 in time.

#include <array>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pourplan/errors.hpp"
#include "pourplan/geometry.hpp"

namespace pourplan {

inline constexpr int kControlPoints = 6;

struct ControlPoints {
  std::array<Pose2, kControlPoints> poses;
  double total_time = 0.0;

  double control_time(int i) const { return total_time * i / (kControlPoints - 1); }
};

namespace detail {

struct Hermite {
  double p0, p1, m0, m1;  // tangents already scaled by the segment length
  double at(double s) const {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 +
           (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
  }
  double rate(double s) const {  // d/ds
    const double s2 = s * s;
    return (6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 +
           (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * m1;
  }
};

template <typename Get>
inline Hermite segment(const ControlPoints& cp, int i, Get get) {
  const double dt = cp.total_time / (kControlPoints - 1);
  auto tangent = [&](int k) {
    if (k == 0) return (get(1) - get(0)) / dt;
    if (k == kControlPoints - 1) return (get(k) - get(k - 1)) / dt;
    return (get(k + 1) - get(k - 1)) / (2.0 * dt);
  };
  return {get(i), get(i + 1), tangent(i) * dt, tangent(i + 1) * dt};
}

}  // namespace detail

inline Pose2 eval_spline(const ControlPoints& cp, double t) {
  if (!(t >= 0.0 && t <= cp.total_time))
    throw std::out_of_range("eval_spline: t outside [0, total_time]");
  const double dt = cp.total_time / (kControlPoints - 1);
  int i = static_cast<int>(t / dt);
  if (i > kControlPoints - 2) i = kControlPoints - 2;
  const double s = (t - i * dt) / dt;
  auto comp = [&](auto get) { return detail::segment(cp, i, get).at(s); };
  return {comp([&](int k) { return cp.poses[k].x; }),
          comp([&](int k) { return cp.poses[k].y; }),
          comp([&](int k) { return cp.poses[k].theta; })};
}

// Time derivative (dx/dt, dy/dt, dtheta/dt) of the interpolant.
inline std::array<double, 3> eval_spline_velocity(const ControlPoints& cp, double t) {
  if (!(t >= 0.0 && t <= cp.total_time))
    throw std::out_of_range("eval_spline_velocity: t outside [0, total_time]");
  const double dt = cp.total_time / (kControlPoints - 1);
  int i = static_cast<int>(t / dt);
  if (i > kControlPoints - 2) i = kControlPoints - 2;
  const double s = (t - i * dt) / dt;
  auto comp = [&](auto get) { return detail::segment(cp, i, get).rate(s) / dt; };
  return {comp([&](int k) { return cp.poses[k].x; }),
          comp([&](int k) { return cp.poses[k].y; }),
          comp([&](int k) { return cp.poses[k].theta; })};
}

// "t x y theta" per line, full double precision.
inline void write_trajectory(const std::string& path, const ControlPoints& cp, double sample_dt) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write trajectory: " + path);
  out.precision(17);
  for (double t = 0.0; t <= cp.total_time + 1e-12; t += sample_dt) {
    const double tc = std::min(t, cp.total_time);
    const Pose2 p = eval_spline(cp, tc);
    out << tc << " " << p.x << " " << p.y << " " << p.theta << "\n";
  }
}

inline std::vector<std::array<double, 4>> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open trajectory: " + path);
  std::vector<std::array<double, 4>> rows;
  double t, x, y, th;
  while (in >> t >> x >> y >> th) rows.push_back({t, x, y, th});
  if (rows.empty()) throw FileFormatError("empty trajectory: " + path);
  return rows;
}

}  // namespace pourplan
