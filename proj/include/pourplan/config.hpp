#pragma once

// Scene geometry constants and problem sampling ranges. Defaults are compiled
// in; a plain-text key=value file can override any field.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "pourplan/errors.hpp"

namespace pourplan {

inline constexpr double kPi = 3.14159265358979323846;

struct SceneConfig {
  // Open-box interiors, metres. Walls rise to the opening plane.
  double source_interior_width = 0.4;
  double source_interior_height = 0.5;
  double target_interior_width = 0.8;
  double target_interior_height = 0.5;
  double wall_thickness = 0.02;

  // The target local origin hovers this far above its opening center, so a
  // vanishing pose gap parks the source lip at a pourable height.
  double target_hover_clearance = 0.15;

  // Shape variants: horizontal inset of the conic floor per side, and the
  // outward bulge of the curved walls at mid-height.
  double conic_taper = 0.08;
  double curve_bulge = 0.06;

  double theta_max = 3.0 * kPi / 4.0;

  // Problem sampling ranges: source-minus-target offset, target velocity,
  // liquid fill fraction of the interior height.
  double rel_x_min = -3.0, rel_x_max = 0.0;
  double rel_y_min = -3.0, rel_y_max = 3.0;
  double vel_min = -5.0, vel_max = 5.0;
  double fill_min = 0.3, fill_max = 0.8;
};

// Parses "key = value" lines ('#' starts a comment). Unknown keys are errors.
inline SceneConfig load_scene_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open scene config: " + path);
  SceneConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
      if (blank) continue;
      throw FileFormatError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    double v = 0.0;
    try {
      v = std::stod(value);
    } catch (const std::exception&) {
      throw FileFormatError(path + ":" + std::to_string(lineno) + ": bad number '" + value + "'");
    }
    if (key == "source_interior_width") cfg.source_interior_width = v;
    else if (key == "source_interior_height") cfg.source_interior_height = v;
    else if (key == "target_interior_width") cfg.target_interior_width = v;
    else if (key == "target_interior_height") cfg.target_interior_height = v;
    else if (key == "wall_thickness") cfg.wall_thickness = v;
    else if (key == "target_hover_clearance") cfg.target_hover_clearance = v;
    else if (key == "conic_taper") cfg.conic_taper = v;
    else if (key == "curve_bulge") cfg.curve_bulge = v;
    else if (key == "theta_max") cfg.theta_max = v;
    else if (key == "rel_x_min") cfg.rel_x_min = v;
    else if (key == "rel_x_max") cfg.rel_x_max = v;
    else if (key == "rel_y_min") cfg.rel_y_min = v;
    else if (key == "rel_y_max") cfg.rel_y_max = v;
    else if (key == "vel_min") cfg.vel_min = v;
    else if (key == "vel_max") cfg.vel_max = v;
    else if (key == "fill_min") cfg.fill_min = v;
    else if (key == "fill_max") cfg.fill_max = v;
    else throw FileFormatError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return cfg;
}

}  // namespace pourplan
