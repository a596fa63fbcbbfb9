#pragma once

// Dataset generation: sample problems, search trajectory coordinates with the
// evolution strategy against the full-simulation reward, and keep only
// trajectories that actually pour (positive scaled reward) with a smooth
// stream (potential-flow residual below threshold whenever enough liquid is
// moving). Problems run in parallel; every random stream is derived from
// (seed, problem index) so the result is identical at any worker count.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pourplan/cmaes.hpp"
#include "pourplan/config.hpp"
#include "pourplan/dataset.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/laminar.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/reward.hpp"
#include "pourplan/transform.hpp"
#include "pourplan/util.hpp"

namespace pourplan {

struct DatagenConfig {
  int problems = 10;
  int iterations = 40;    // evolution strategy generations per problem
  int population = 16;
  int steps = 250;        // groundtruth rollout steps of caller_dt each
  double caller_dt = 0.01;
  std::uint64_t seed = 0;
  VelocityMode variant = VelocityMode::Follow;
  SceneConfig scene;
  SimConfig sim;
  double laminar_threshold = 0.2;
  bool enforce_laminar = true;
};

struct DatagenLog {
  struct Entry {
    int index = 0;
    std::uint64_t problem_seed = 0;
    bool kept = false;
    std::string reason;      // when skipped
    double best_reward = 0.0;
    double scaled_reward = 0.0;
  };
  std::vector<Entry> entries;

  int kept_count() const {
    int n = 0;
    for (const Entry& e : entries) n += e.kept ? 1 : 0;
    return n;
  }
};

// Problem seeds are sequential from the base seed so a held-out evaluation
// range (a disjoint seed interval) is easy to reserve.
inline std::uint64_t dataset_problem_seed(std::uint64_t base, int index) {
  return base + static_cast<std::uint64_t>(index);
}

inline Dataset generate_dataset(const DatagenConfig& cfg, DatagenLog* log = nullptr) {
  if (cfg.problems < 0) throw std::invalid_argument("generate_dataset: negative problem count");
  if (cfg.iterations < 1 || cfg.population < 2 || cfg.steps < 1)
    throw std::invalid_argument("generate_dataset: budget must be positive");

  std::vector<std::optional<TrajectoryRecord>> slots(cfg.problems);
  std::vector<DatagenLog::Entry> entries(cfg.problems);

  parallel_for(static_cast<std::size_t>(cfg.problems), [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    const std::uint64_t pseed = dataset_problem_seed(cfg.seed, i);
    ProblemSpec problem = sample_problem(pseed, fill_grid_value(i, cfg.scene), cfg.scene);
    problem.velocity_mode = cfg.variant;
    problem.viscosity = cfg.sim.viscosity;

    DatagenLog::Entry& entry = entries[idx];
    entry.index = i;
    entry.problem_seed = pseed;

    auto objective = [&](const std::vector<double>& x) {
      TransformedCoords coords;
      std::copy(x.begin(), x.end(), coords.data());
      try {
        return -pour_reward(problem, coords, cfg.scene, cfg.sim, cfg.steps, cfg.caller_dt)
                    .total;
      } catch (const SimulationDiverged&) {
        return std::numeric_limits<double>::infinity();
      }
    };

    CmaOptions opt;
    opt.iterations = cfg.iterations;
    opt.population = cfg.population;
    opt.seed = mix_seed(pseed, 0x5eedu);
    const CmaResult res = cmaes_minimize(objective, kTransformDim, opt);
    entry.best_reward = -res.best_value;

    TransformedCoords best;
    std::copy(res.best_point.begin(), res.best_point.end(), best.data());
    PourTrace trace;
    RewardReport reward;
    try {
      reward = pour_reward(problem, best, cfg.scene, cfg.sim, cfg.steps, cfg.caller_dt,
                           &trace);
    } catch (const SimulationDiverged& e) {
      entry.reason = std::string("best candidate diverged on replay: ") + e.what();
      return;
    }
    entry.scaled_reward = reward.scaled();
    if (reward.scaled() <= 0.0) {
      entry.reason = "no pouring trajectory found within budget";
      return;
    }
    if (cfg.enforce_laminar) {
      for (const TraceFrame& f : trace.frames) {
        if (!laminar_gate_applies(f.state)) continue;
        const double m = laminar_metric(f.state, kLaminarResolution);
        if (!(m < cfg.laminar_threshold)) {
          entry.reason = "stream too turbulent at t=" + std::to_string(f.t) +
                         " (metric " + std::to_string(m) + ")";
          return;
        }
      }
    }

    const Scene scene = build_scene(problem, cfg.scene);
    TrajectoryRecord rec;
    rec.problem = problem;
    rec.control = from_transformed(best, scene.source_pose0, scene.target_track,
                                   scene.theta_max, cfg.steps * cfg.caller_dt);
    rec.samples =
        extract_samples(trace, problem, cfg.scene, reward, cfg.sim.particle_spacing);
    rec.reward_total = reward.total;
    rec.in_target = reward.in_target;
    rec.spilled = reward.spilled;
    rec.remaining = reward.remaining;
    rec.convergence.assign(res.history.begin(), res.history.end());
    for (double& v : rec.convergence) v = -v;  // store as best reward per generation
    entry.kept = true;
    slots[idx] = std::move(rec);
  });

  Dataset out;
  out.meta.variant = cfg.variant;
  out.meta.problems = cfg.problems;
  out.meta.iters = cfg.iterations;
  out.meta.population = cfg.population;
  out.meta.steps = cfg.steps;
  out.meta.seed = cfg.seed;
  out.meta.particle_spacing = cfg.sim.particle_spacing;
  for (std::optional<TrajectoryRecord>& s : slots)
    if (s) out.trajectories.push_back(std::move(*s));
  if (log) log->entries = std::move(entries);
  return out;
}

}  // namespace pourplan
