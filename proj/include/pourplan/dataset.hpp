#pragma once

// Training data extracted from successful groundtruth pours. Each sample
// carries both observation stacks (full heightfield and lip-only) so one
// generation run can train either feature kind, the rigid poses, and two
// labels: the fitted outflow curve and the next-interval transformed
// coordinates of the groundtruth trajectory.
//
// File format (UTF-8 text, line-delimited):
//   #meta variant=... problems=... iters=... pop=... steps=... seed=... spacing=...
//   #fields hf[128] lip[4] sx sy st tx ty tth tvx tvy cpx cpy cvx cvy crho pa pb pg
//   #traj index=... samples=N reward_total=... in_target=... spilled=...
//         remaining=... total_time=... <problem fields> control=... convergence=...
//   N whitespace-separated numeric sample lines follow each #traj record.

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pourplan/errors.hpp"
#include "pourplan/features.hpp"
#include "pourplan/outflow.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/reward.hpp"
#include "pourplan/spline.hpp"

namespace pourplan {

struct PourSample {
  std::vector<double> hf_stack;   // kFeatureHistory * kHeightfieldBins
  std::vector<double> lip_stack;  // kFeatureHistory
  Pose2 source_pose;
  Pose2 target_pose;
  Vec2 target_velocity;
  OutflowCurve label_curve;
  std::array<double, 3> label_prior{1.0, 1.0, 1.0};

  const std::vector<double>& stack(ModelInputKind kind) const {
    return kind == ModelInputKind::Heightfield ? hf_stack : lip_stack;
  }
  std::vector<double> model_input(ModelInputKind kind) const {
    return build_model_input(kind, stack(kind), source_pose, target_pose, target_velocity);
  }
  std::array<double, 5> curve_label() const {
    return {label_curve.p_local.x, label_curve.p_local.y, label_curve.v.x, label_curve.v.y,
            label_curve.rho};
  }
};

struct TrajectoryRecord {
  ProblemSpec problem;
  ControlPoints control;
  std::vector<PourSample> samples;
  double reward_total = 0.0;
  int in_target = 0;
  int spilled = 0;
  int remaining = 0;
  std::vector<double> convergence;  // best reward per CMA-ES generation

  double scaled_reward() const {
    const int c = in_target + spilled + remaining;
    return c > 0 ? reward_total / c : 0.0;
  }
};

struct DatasetMeta {
  VelocityMode variant = VelocityMode::Follow;
  int problems = 0;
  int iters = 0;
  int population = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  double particle_spacing = 0.009;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<TrajectoryRecord> trajectories;

  std::size_t sample_count() const {
    std::size_t n = 0;
    for (const TrajectoryRecord& t : trajectories) n += t.samples.size();
    return n;
  }
};

// Single-interval transformed coordinates of the groundtruth motion between
// two consecutive planner frames; ratios clamped into (0, 1].
inline std::array<double, 3> interval_prior_label(Pose2 s0, Pose2 t0, Pose2 s1, Pose2 t1,
                                                  double theta_max) {
  auto ratio = [](double g0, double g1) {
    return g0 > 1e-12 ? std::clamp(g1 / g0, 1e-4, 1.0) : 1.0;
  };
  return {ratio(std::abs(s0.x - t0.x), std::abs(s1.x - t1.x)),
          ratio(std::abs(s0.y - t0.y), std::abs(s1.y - t1.y)),
          ratio(theta_max - s0.theta, theta_max - s1.theta)};
}

inline std::vector<PourSample> extract_samples(const PourTrace& trace,
                                               const ProblemSpec& problem,
                                               const SceneConfig& scene_cfg,
                                               const RewardReport& reward,
                                               double particle_spacing) {
  if (reward.scaled() <= 0.0)
    throw RejectedTrajectory("extract_samples: trajectory reward is not positive");
  if (trace.frames.size() < 2)
    throw std::invalid_argument("extract_samples: trace needs >= 2 frames");
  const Scene scene = build_scene(problem, scene_cfg);

  std::vector<FeatureFrame> feats(trace.frames.size());
  for (std::size_t j = 0; j < trace.frames.size(); ++j)
    feats[j] = compute_feature_frame(trace.frames[j].state, scene.source,
                                     trace.frames[j].source_pose);

  std::vector<PourSample> out;
  out.reserve(trace.frames.size() - 1);
  for (std::size_t j = 0; j + 1 < trace.frames.size(); ++j) {
    const TraceFrame& f = trace.frames[j];
    const TraceFrame& fn = trace.frames[j + 1];
    PourSample s;
    FeatureHistory hist;
    const std::size_t w0 = j >= kFeatureHistory - 1 ? j - (kFeatureHistory - 1) : 0;
    for (std::size_t k = w0; k <= j; ++k) hist.push(feats[k]);
    s.hf_stack = hist.stacked_heightfield();
    s.lip_stack = hist.stacked_lip();
    s.source_pose = f.source_pose;
    s.target_pose = f.target_pose;
    s.target_velocity = scene.target_track.velocity;
    const double opening_y =
        f.target_pose.to_world(scene.target.opening_center_local).y;
    if (j == 0) {
      // No history yet; at the first frame nothing has left the source.
      s.label_curve.p_local = scene.source.lip_point_local;
    } else {
      s.label_curve = fit_outflow_curve(
          std::span<const TraceFrame>(trace.frames.data() + w0, j - w0 + 1),
          scene.source, opening_y, 9.8, particle_spacing);
    }
    s.label_prior = interval_prior_label(f.source_pose, f.target_pose, fn.source_pose,
                                         fn.target_pose, scene.theta_max);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// File IO

namespace detail {

inline std::string join_doubles(const std::vector<double>& v, char sep) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

inline std::vector<double> split_doubles(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

// Parses "key=value" tokens separated by spaces.
inline std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& line) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return kv;
}

}  // namespace detail

inline void write_dataset(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write dataset: " + path);
  out.precision(17);
  out << "#meta variant=" << velocity_mode_name(d.meta.variant)
      << " problems=" << d.meta.problems << " iters=" << d.meta.iters
      << " pop=" << d.meta.population << " steps=" << d.meta.steps
      << " seed=" << d.meta.seed << " spacing=" << d.meta.particle_spacing << "\n";
  out << "#fields hf[" << kFeatureHistory * kHeightfieldBins << "] lip[" << kFeatureHistory
      << "] sx sy st tx ty tth tvx tvy cpx cpy cvx cvy crho pa pb pg\n";
  for (std::size_t ti = 0; ti < d.trajectories.size(); ++ti) {
    const TrajectoryRecord& t = d.trajectories[ti];
    std::vector<double> cp;
    for (const Pose2& p : t.control.poses) {
      cp.push_back(p.x);
      cp.push_back(p.y);
      cp.push_back(p.theta);
    }
    out << "#traj index=" << ti << " samples=" << t.samples.size()
        << " reward_total=" << t.reward_total << " in_target=" << t.in_target
        << " spilled=" << t.spilled << " remaining=" << t.remaining
        << " total_time=" << t.control.total_time << " rel_x=" << t.problem.rel_position.x
        << " rel_y=" << t.problem.rel_position.y
        << " target_vx=" << t.problem.target_velocity.x
        << " target_vy=" << t.problem.target_velocity.y << " fill=" << t.problem.fill_level
        << " mode=" << velocity_mode_name(t.problem.velocity_mode)
        << " source_shape=" << shape_name(t.problem.source_shape)
        << " target_shape=" << shape_name(t.problem.target_shape)
        << " viscosity=" << t.problem.viscosity << " pseed=" << t.problem.seed
        << " control=" << detail::join_doubles(cp, ',')
        << " convergence=" << detail::join_doubles(t.convergence, ',') << "\n";
    for (const PourSample& s : t.samples) {
      for (double v : s.hf_stack) out << v << " ";
      for (double v : s.lip_stack) out << v << " ";
      out << s.source_pose.x << " " << s.source_pose.y << " " << s.source_pose.theta << " "
          << s.target_pose.x << " " << s.target_pose.y << " " << s.target_pose.theta << " "
          << s.target_velocity.x << " " << s.target_velocity.y << " "
          << s.label_curve.p_local.x << " " << s.label_curve.p_local.y << " "
          << s.label_curve.v.x << " " << s.label_curve.v.y << " " << s.label_curve.rho << " "
          << s.label_prior[0] << " " << s.label_prior[1] << " " << s.label_prior[2] << "\n";
    }
  }
  if (!out) throw FileFormatError("write failed: " + path);
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open dataset: " + path);
  Dataset d;
  std::string line;
  int lineno = 0;
  long pending_samples = 0;
  const int hf_n = kFeatureHistory * kHeightfieldBins;
  const int line_values = hf_n + kFeatureHistory + 3 + 3 + 2 + 5 + 3;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw FileFormatError(path + ":" + std::to_string(lineno) + ": " + why);
    };
    if (line.rfind("#meta", 0) == 0) {
      for (const auto& [k, v] : detail::parse_kv(line.substr(5))) {
        if (k == "variant") d.meta.variant = parse_velocity_mode(v);
        else if (k == "problems") d.meta.problems = std::stoi(v);
        else if (k == "iters") d.meta.iters = std::stoi(v);
        else if (k == "pop") d.meta.population = std::stoi(v);
        else if (k == "steps") d.meta.steps = std::stoi(v);
        else if (k == "seed") d.meta.seed = std::stoull(v);
        else if (k == "spacing") d.meta.particle_spacing = std::stod(v);
        else fail("unknown meta key '" + k + "'");
      }
    } else if (line.rfind("#fields", 0) == 0) {
      continue;
    } else if (line.rfind("#traj", 0) == 0) {
      if (pending_samples > 0) fail("previous trajectory is missing samples");
      TrajectoryRecord t;
      t.problem.velocity_mode = d.meta.variant;
      for (const auto& [k, v] : detail::parse_kv(line.substr(5))) {
        if (k == "index") continue;
        else if (k == "samples") pending_samples = std::stol(v);
        else if (k == "reward_total") t.reward_total = std::stod(v);
        else if (k == "in_target") t.in_target = std::stoi(v);
        else if (k == "spilled") t.spilled = std::stoi(v);
        else if (k == "remaining") t.remaining = std::stoi(v);
        else if (k == "total_time") t.control.total_time = std::stod(v);
        else if (k == "rel_x") t.problem.rel_position.x = std::stod(v);
        else if (k == "rel_y") t.problem.rel_position.y = std::stod(v);
        else if (k == "target_vx") t.problem.target_velocity.x = std::stod(v);
        else if (k == "target_vy") t.problem.target_velocity.y = std::stod(v);
        else if (k == "fill") t.problem.fill_level = std::stod(v);
        else if (k == "mode") t.problem.velocity_mode = parse_velocity_mode(v);
        else if (k == "source_shape") t.problem.source_shape = parse_shape(v);
        else if (k == "target_shape") t.problem.target_shape = parse_shape(v);
        else if (k == "viscosity") t.problem.viscosity = std::stod(v);
        else if (k == "pseed") t.problem.seed = std::stoull(v);
        else if (k == "control") {
          const std::vector<double> cp = detail::split_doubles(v, ',');
          if (cp.size() != 3 * kControlPoints) fail("control pose count mismatch");
          for (int i = 0; i < kControlPoints; ++i)
            t.control.poses[i] = Pose2{cp[3 * i], cp[3 * i + 1], cp[3 * i + 2]};
        } else if (k == "convergence") {
          t.convergence = detail::split_doubles(v, ',');
        } else {
          fail("unknown traj key '" + k + "'");
        }
      }
      d.trajectories.push_back(std::move(t));
    } else {
      if (d.trajectories.empty() || pending_samples <= 0) fail("sample line outside a trajectory");
      std::istringstream ss(line);
      std::vector<double> vals;
      vals.reserve(line_values);
      double x;
      while (ss >> x) vals.push_back(x);
      if (static_cast<int>(vals.size()) != line_values) fail("bad sample field count");
      PourSample s;
      int k = 0;
      s.hf_stack.assign(vals.begin(), vals.begin() + hf_n);
      k += hf_n;
      s.lip_stack.assign(vals.begin() + k, vals.begin() + k + kFeatureHistory);
      k += kFeatureHistory;
      s.source_pose = Pose2{vals[k], vals[k + 1], vals[k + 2]};
      k += 3;
      s.target_pose = Pose2{vals[k], vals[k + 1], vals[k + 2]};
      k += 3;
      s.target_velocity = Vec2{vals[k], vals[k + 1]};
      k += 2;
      s.label_curve.p_local = Vec2{vals[k], vals[k + 1]};
      s.label_curve.v = Vec2{vals[k + 2], vals[k + 3]};
      s.label_curve.rho = vals[k + 4];
      k += 5;
      s.label_prior = {vals[k], vals[k + 1], vals[k + 2]};
      d.trajectories.back().samples.push_back(std::move(s));
      --pending_samples;
    }
  }
  if (pending_samples > 0)
    throw FileFormatError(path + ": truncated: last trajectory is missing samples");
  return d;
}

}  // namespace pourplan
