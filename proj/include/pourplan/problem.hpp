#pragma once

// Pouring problem parameters and their deterministic sampler.

#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "pourplan/config.hpp"
#include "pourplan/container.hpp"
#include "pourplan/rng.hpp"

namespace pourplan {

// FOLLOW: the liquid starts with the source's velocity (co-moving
// equilibrium). ZERO: the liquid starts at rest regardless of the source.
enum class VelocityMode { Follow, Zero };

inline std::string velocity_mode_name(VelocityMode m) {
  return m == VelocityMode::Follow ? "follow" : "zero";
}

inline VelocityMode parse_velocity_mode(const std::string& s) {
  if (s == "follow") return VelocityMode::Follow;
  if (s == "zero") return VelocityMode::Zero;
  throw FileFormatError("unknown velocity mode '" + s + "'");
}

struct ProblemSpec {
  Vec2 rel_position;        // source minus target, sampled in [-3,0] x [-3,3]
  Vec2 target_velocity;     // constant, sampled in [-5,5]^2
  double fill_level = 0.5;  // fraction of the source interior height
  VelocityMode velocity_mode = VelocityMode::Follow;
  ShapeTag source_shape = ShapeTag::Rectangular;
  ShapeTag target_shape = ShapeTag::Rectangular;
  double viscosity = 0.001;
  std::uint64_t seed = 0;
};

// True when the containers' outer bounding boxes (walls included, plus a
// safety margin) would intersect at the initial placement. Such scenes start
// in collision and are not physically posable, so the sampler redraws them.
inline bool initial_placement_collides(Vec2 rel, const SceneConfig& cfg) {
  const double t = cfg.wall_thickness;
  const double gap = 0.05;
  // Source outer box relative to its lip-origin pose at rel; body extends one
  // interior width to the pouring-away side and one height down.
  const double sx0 = rel.x - cfg.source_interior_width - t, sx1 = rel.x + t;
  const double sy0 = rel.y - cfg.source_interior_height - t, sy1 = rel.y + t;
  // Target outer box relative to its hover-origin pose at (0, 0).
  const double hw = 0.5 * cfg.target_interior_width;
  const double tx0 = -hw - t, tx1 = hw + t;
  const double ty0 = -cfg.target_hover_clearance - cfg.target_interior_height - t;
  const double ty1 = -cfg.target_hover_clearance + t;
  return sx0 < tx1 + gap && tx0 < sx1 + gap && sy0 < ty1 + gap && ty0 < sy1 + gap;
}

// Deterministic given (seed, fill_level). The fill level is an explicit grid
// value chosen by the caller rather than a random draw. Placements that start
// in collision are rejected and redrawn from the same stream.
inline ProblemSpec sample_problem(std::uint64_t seed, double fill_level,
                                  const SceneConfig& cfg = SceneConfig{}) {
  if (!(fill_level >= cfg.fill_min && fill_level <= cfg.fill_max))
    throw std::out_of_range("sample_problem: fill level outside [" +
                            std::to_string(cfg.fill_min) + ", " +
                            std::to_string(cfg.fill_max) + "]");
  std::mt19937_64 eng(seed);
  ProblemSpec p;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    p.rel_position.x = uniform(eng, cfg.rel_x_min, cfg.rel_x_max);
    p.rel_position.y = uniform(eng, cfg.rel_y_min, cfg.rel_y_max);
    if (!initial_placement_collides(p.rel_position, cfg)) break;
  }
  p.target_velocity.x = uniform(eng, cfg.vel_min, cfg.vel_max);
  p.target_velocity.y = uniform(eng, cfg.vel_min, cfg.vel_max);
  p.fill_level = fill_level;
  p.seed = seed;
  return p;
}

// Fill grid used by dataset generation and benchmarks: fill_min upward in
// steps of 0.12, cycled by problem index.
inline double fill_grid_value(int index, const SceneConfig& cfg = SceneConfig{}) {
  const int levels = static_cast<int>((cfg.fill_max - cfg.fill_min) / 0.12) + 1;
  return cfg.fill_min + 0.12 * (index % levels);
}

inline void write_problem(const std::string& path, const ProblemSpec& p) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write problem spec: " + path);
  out.precision(17);
  out << "rel_x = " << p.rel_position.x << "\n"
      << "rel_y = " << p.rel_position.y << "\n"
      << "target_vx = " << p.target_velocity.x << "\n"
      << "target_vy = " << p.target_velocity.y << "\n"
      << "fill = " << p.fill_level << "\n"
      << "mode = " << velocity_mode_name(p.velocity_mode) << "\n"
      << "source_shape = " << shape_name(p.source_shape) << "\n"
      << "target_shape = " << shape_name(p.target_shape) << "\n"
      << "viscosity = " << p.viscosity << "\n"
      << "seed = " << p.seed << "\n";
}

inline ProblemSpec read_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open problem spec: " + path);
  ProblemSpec p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "rel_x") p.rel_position.x = std::stod(value);
      else if (key == "rel_y") p.rel_position.y = std::stod(value);
      else if (key == "target_vx") p.target_velocity.x = std::stod(value);
      else if (key == "target_vy") p.target_velocity.y = std::stod(value);
      else if (key == "fill") p.fill_level = std::stod(value);
      else if (key == "mode") p.velocity_mode = parse_velocity_mode(value);
      else if (key == "source_shape") p.source_shape = parse_shape(value);
      else if (key == "target_shape") p.target_shape = parse_shape(value);
      else if (key == "viscosity") p.viscosity = std::stod(value);
      else if (key == "seed") p.seed = std::stoull(value);
      else throw FileFormatError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const FileFormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FileFormatError(path + ":" + std::to_string(lineno) + ": bad value '" + value + "'");
    }
  }
  return p;
}

}  // namespace pourplan
