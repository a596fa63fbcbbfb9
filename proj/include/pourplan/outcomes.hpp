#pragma once

// Per-particle pour outcome tracking. The tracker watches every simulator
// sub-step and records the first time each particle crosses the target's
// opening segment moving inward, together with the horizontal distance from
// the opening center at the crossing. Classification at the end of an episode
// combines that record with the final particle positions.

#include <cmath>
#include <vector>

#include "pourplan/container.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/sim.hpp"

namespace pourplan {

enum class ParticleOutcome { Remaining, InTarget, Spilled };

class OutcomeTracker {
 public:
  OutcomeTracker(const Container& source, const Container& target, std::size_t count)
      : source_(&source),
        target_(&target),
        crossed_(count, 0),
        cross_distance_(count, 0.0) {}

  // Call once per simulator sub-step with positions before and after it and
  // the target pose at each end. Motion is evaluated in the target's local
  // frame so a moving container is handled correctly.
  void observe(const std::vector<Vec2>& before, Pose2 target_pose_before,
               const LiquidState& after, Pose2 target_pose_after) {
    if (before.size() != after.particles.size() || before.size() != crossed_.size())
      throw ShapeMismatch("OutcomeTracker: particle count changed");
    const Vec2 center = target_->opening_center_local;
    const double half_w = target_->opening_half_width;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (crossed_[i]) continue;
      const Vec2 a = target_pose_before.to_local(before[i]);
      const Vec2 b = target_pose_after.to_local(after.particles[i].position);
      if (!(a.y > center.y && b.y <= center.y)) continue;
      const double t = (a.y - center.y) / (a.y - b.y);
      const double x = a.x + t * (b.x - a.x);
      if (std::abs(x - center.x) <= half_w) {
        crossed_[i] = 1;
        cross_distance_[i] = std::abs(x - center.x);
      }
    }
  }

  struct Result {
    std::vector<ParticleOutcome> outcome;
    std::vector<double> cross_distance;  // defined where outcome == InTarget
  };

  Result classify(const LiquidState& final_state, Pose2 source_pose,
                  Pose2 target_pose) const {
    if (final_state.particles.size() != crossed_.size())
      throw ShapeMismatch("OutcomeTracker: particle count changed");
    Result r;
    r.outcome.resize(crossed_.size());
    r.cross_distance = cross_distance_;
    for (std::size_t i = 0; i < crossed_.size(); ++i) {
      const Vec2 p = final_state.particles[i].position;
      if (crossed_[i] && target_->contains_world(p, target_pose))
        r.outcome[i] = ParticleOutcome::InTarget;
      else if (!source_->contains_world(p, source_pose))
        r.outcome[i] = ParticleOutcome::Spilled;
      else
        r.outcome[i] = ParticleOutcome::Remaining;
    }
    return r;
  }

 private:
  const Container* source_;
  const Container* target_;
  std::vector<char> crossed_;
  std::vector<double> cross_distance_;
};

}  // namespace pourplan
