#pragma once

#include <stdexcept>
#include <string>

namespace pourplan {

// Simulation produced a non-finite particle quantity; carries the step index.
struct SimulationDiverged : std::runtime_error {
  explicit SimulationDiverged(long step_index_)
      : std::runtime_error("simulation diverged at step " + std::to_string(step_index_)),
        step_index(step_index_) {}
  long step_index;
};

// Scene configuration yields an empty liquid body.
struct DegenerateScene : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Monotone trajectory transform is undefined (an initial gap is exactly zero).
struct DegenerateTransform : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Control points are not representable in transformed coordinates.
struct NotRepresentable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Laminar metric is undefined for an (almost) zero velocity field.
struct UndefinedMetric : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Network input width does not match the parameter shapes.
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sample extraction was asked to run on an unsuccessful trajectory.
struct RejectedTrajectory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input file.
struct FileFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pourplan
