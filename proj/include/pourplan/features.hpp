#pragma once

// Liquid observations in the source container's local frame: a free-surface
// heightfield over the interior width (heights from the interior floor) and
// the liquid height at the lip (measured from the lip level itself, so an
// upright, partly filled container reads 0). A short history assembles the
// model inputs.

#include <algorithm>
#include <array>
#include <deque>
#include <vector>

#include "pourplan/container.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/sim.hpp"

namespace pourplan {

inline constexpr int kHeightfieldBins = 32;
inline constexpr int kFeatureHistory = 4;

struct Heightfield {
  std::vector<double> samples;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

inline Heightfield heightfield(const LiquidState& state, const Container& source,
                               Pose2 pose, int bins = kHeightfieldBins) {
  if (bins < 1) throw std::invalid_argument("heightfield: bins must be >= 1");
  Heightfield hf;
  hf.window_lo = source.interior_bounds.lo.x;
  hf.window_hi = source.interior_bounds.hi.x;
  hf.samples.assign(bins, 0.0);
  const double width = hf.window_hi - hf.window_lo;
  const double floor_y = source.interior_bounds.lo.y;
  for (const Particle& p : state.particles) {
    const Vec2 local = pose.to_local(p.position);
    if (local.x < hf.window_lo || local.x > hf.window_hi) continue;
    const double h = local.y - floor_y;
    if (h < 0.0) continue;
    int b = static_cast<int>((local.x - hf.window_lo) / width * bins);
    b = std::clamp(b, 0, bins - 1);
    hf.samples[b] = std::max(hf.samples[b], h);
  }
  return hf;
}

// Height of liquid above the lip level, within the heightfield bin that
// contains the lip. Zero when nothing reaches the lip.
inline double lip_height(const LiquidState& state, const Container& source, Pose2 pose,
                         int bins = kHeightfieldBins) {
  const double lo = source.interior_bounds.lo.x;
  const double hi = source.interior_bounds.hi.x;
  const double width = hi - lo;
  const int lip_bin = std::clamp(
      static_cast<int>((source.lip_point_local.x - lo) / width * bins), 0, bins - 1);
  const double lip_y = source.lip_point_local.y;
  double best = 0.0;
  for (const Particle& p : state.particles) {
    const Vec2 local = pose.to_local(p.position);
    if (local.x < lo || local.x > hi) continue;
    int b = static_cast<int>((local.x - lo) / width * bins);
    b = std::clamp(b, 0, bins - 1);
    if (b != lip_bin) continue;
    best = std::max(best, local.y - lip_y);
  }
  return best;
}

struct FeatureFrame {
  std::vector<double> heightfield_samples;  // kHeightfieldBins entries
  double lip = 0.0;
};

inline FeatureFrame compute_feature_frame(const LiquidState& state, const Container& source,
                                          Pose2 pose) {
  FeatureFrame f;
  f.heightfield_samples = heightfield(state, source, pose).samples;
  f.lip = lip_height(state, source, pose);
  return f;
}

// Sliding window of the most recent frames. Stacks are oldest-first; when
// fewer than kFeatureHistory frames have been seen, the oldest one pads the
// front so the layout is stable from the first query.
class FeatureHistory {
 public:
  void push(FeatureFrame frame) {
    frames_.push_back(std::move(frame));
    if (frames_.size() > kFeatureHistory) frames_.pop_front();
  }
  void clear() { frames_.clear(); }
  bool empty() const { return frames_.empty(); }

  std::vector<double> stacked_heightfield() const {
    std::vector<double> out;
    out.reserve(kFeatureHistory * kHeightfieldBins);
    for (int k = 0; k < kFeatureHistory; ++k) {
      const FeatureFrame& f = frame_at(k);
      out.insert(out.end(), f.heightfield_samples.begin(), f.heightfield_samples.end());
    }
    return out;
  }

  std::vector<double> stacked_lip() const {
    std::vector<double> out(kFeatureHistory);
    for (int k = 0; k < kFeatureHistory; ++k) out[k] = frame_at(k).lip;
    return out;
  }

 private:
  const FeatureFrame& frame_at(int k) const {
    if (frames_.empty()) throw std::logic_error("FeatureHistory: no frames pushed");
    const int pad = kFeatureHistory - static_cast<int>(frames_.size());
    return frames_[static_cast<std::size_t>(std::max(0, k - pad))];
  }

  std::deque<FeatureFrame> frames_;
};

enum class ModelInputKind { Heightfield, Lip };

inline const char* model_input_name(ModelInputKind k) {
  return k == ModelInputKind::Heightfield ? "heightfield" : "lip";
}

inline int model_input_dim(ModelInputKind k) {
  const int stack = (k == ModelInputKind::Heightfield) ? kFeatureHistory * kHeightfieldBins
                                                       : kFeatureHistory;
  return stack + 3 + 2;
}

// Model input layout: [liquid stack | source pose relative to target
// (dx, dy, theta) | target velocity (vx, vy)].
inline std::vector<double> build_model_input(ModelInputKind kind,
                                             const std::vector<double>& stack,
                                             Pose2 source_pose, Pose2 target_pose,
                                             Vec2 target_velocity) {
  std::vector<double> in = stack;
  in.push_back(source_pose.x - target_pose.x);
  in.push_back(source_pose.y - target_pose.y);
  in.push_back(source_pose.theta);
  in.push_back(target_velocity.x);
  in.push_back(target_velocity.y);
  if (static_cast<int>(in.size()) != model_input_dim(kind))
    throw ShapeMismatch("build_model_input: stack size does not match input kind");
  return in;
}

}  // namespace pourplan
