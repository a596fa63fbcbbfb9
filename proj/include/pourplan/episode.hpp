#pragma once

// Closed-loop pouring episode. At the planner rate the loop observes the
// liquid through the feature history, asks the planner for the next pose, and
// commands the source container toward it as a kinematic boundary while the
// simulator sub-steps underneath. The source starts at rest, so FOLLOW and
// ZERO initial conditions coincide here (the liquid matches a motionless
// source either way); the mode is still threaded through for symmetry with
// the groundtruth rollouts.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pourplan/config.hpp"
#include "pourplan/container.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/features.hpp"
#include "pourplan/mlp.hpp"
#include "pourplan/outcomes.hpp"
#include "pourplan/planner.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/reward.hpp"
#include "pourplan/sim.hpp"
#include "pourplan/util.hpp"

namespace pourplan {

struct EpisodeConfig {
  double duration = 3.0;
  PlannerConfig planner;
  SimConfig sim;
  SceneConfig scene;
  std::vector<Sphere> obstacles;  // world frame, stationary
};

struct EpisodeResult {
  bool failed = false;
  std::string diagnostic;
  RewardReport reward;
  double spill_fraction = 0.0;
  double mean_in_target_rp = 0.0;  // mean R_p over particles that landed in the target
  double max_obstacle_penetration = 0.0;
  std::vector<double> plan_times_ms;  // one entry per planner tick
  PourTrace trace;                    // one frame per planner tick plus the final state
};

inline EpisodeResult run_episode(const ProblemSpec& problem, const MlpParams& params,
                                 const EpisodeConfig& cfg) {
  cfg.planner.validate();
  SimConfig sim_cfg = cfg.sim;
  sim_cfg.viscosity = problem.viscosity;
  sim_cfg.validate();
  const double tick_dt = cfg.planner.dt;
  const long subs_per_tick = std::lround(tick_dt / sim_cfg.dt);
  if (subs_per_tick < 1 || std::abs(subs_per_tick * sim_cfg.dt - tick_dt) > 1e-9)
    throw std::invalid_argument("run_episode: planner dt must be a multiple of sim dt");
  const int ticks = static_cast<int>(std::lround(cfg.duration / tick_dt));
  if (ticks < 1) throw std::invalid_argument("run_episode: duration shorter than one tick");

  const Scene scene = build_scene(problem, cfg.scene);
  FluidSim sim(sim_cfg);
  LiquidState liquid =
      FluidSim::init_liquid(scene.source, scene.source_pose0, problem.fill_level,
                            problem.velocity_mode, Vec2{0.0, 0.0}, sim_cfg.particle_spacing);
  OutcomeTracker tracker(scene.source, scene.target, liquid.particles.size());

  EpisodeResult out;
  out.plan_times_ms.reserve(ticks);
  FeatureHistory history;
  std::vector<Vec2> before(liquid.particles.size());

  Pose2 cur = scene.source_pose0;
  Pose2 prev = cur;
  Pose2 tgt_prev = scene.target_track.at(0.0);
  Vec2 cmd_vel{0.0, 0.0};
  double cmd_rate = 0.0;

  auto record = [&](double t, Pose2 sp, Pose2 tp) {
    TraceFrame f;
    f.t = t;
    f.state = liquid;
    f.source_pose = sp;
    f.target_pose = tp;
    f.source_velocity = cmd_vel;
    f.source_angular_rate = cmd_rate;
    out.trace.frames.push_back(std::move(f));
  };

  auto penetration_now = [&](Pose2 pose) {
    if (cfg.obstacles.empty()) return 0.0;
    return penetration_depth(transform_spheres(scene.source.local_spheres, pose),
                             cfg.obstacles);
  };

  try {
    for (int tick = 0; tick < ticks; ++tick) {
      const double t = tick * tick_dt;
      history.push(compute_feature_frame(liquid, scene.source, cur));
      const std::vector<double> stack = params.kind == ModelInputKind::Heightfield
                                            ? history.stacked_heightfield()
                                            : history.stacked_lip();

      PlanContext ctx;
      ctx.source = &scene.source;
      ctx.target = &scene.target;
      ctx.track = scene.target_track;
      ctx.t_now = t;
      ctx.obstacles = cfg.obstacles;
      ctx.anchor0 = cur;
      ctx.anchor1 = prev;
      ctx.first_call = tick == 0;

      Stopwatch watch;
      const HorizonDecision decision = plan_step(params, stack, ctx, cfg.planner);
      out.plan_times_ms.push_back(watch.elapsed_ms());

      const Pose2 goal = decision.adopted;
      cmd_vel = Vec2{(goal.x - cur.x) / tick_dt, (goal.y - cur.y) / tick_dt};
      cmd_rate = (goal.theta - cur.theta) / tick_dt;
      record(t, cur, tgt_prev);

      for (long s = 1; s <= subs_per_tick; ++s) {
        const double frac = static_cast<double>(s) / subs_per_tick;
        const Pose2 sp{cur.x + (goal.x - cur.x) * frac, cur.y + (goal.y - cur.y) * frac,
                       cur.theta + (goal.theta - cur.theta) * frac};
        const Pose2 tp = scene.target_track.at(t + s * sim_cfg.dt);
        RigidBodyState src_body{&scene.source, sp, cmd_vel, cmd_rate};
        RigidBodyState tgt_body{&scene.target, tp, scene.target_track.velocity, 0.0};
        for (std::size_t i = 0; i < liquid.particles.size(); ++i)
          before[i] = liquid.particles[i].position;
        sim.step(liquid, &src_body, &tgt_body);
        tracker.observe(before, tgt_prev, liquid, tp);
        tgt_prev = tp;
        out.max_obstacle_penetration =
            std::max(out.max_obstacle_penetration, penetration_now(sp));
      }
      prev = cur;
      cur = goal;
    }
  } catch (const SimulationDiverged& e) {
    out.failed = true;
    out.diagnostic = e.what();
    return out;
  }

  record(ticks * tick_dt, cur, tgt_prev);
  const auto outcome = tracker.classify(liquid, cur, tgt_prev);
  out.reward = score_outcomes(outcome, scene.target.opening_half_width);
  const int count = out.reward.count();
  out.spill_fraction = count > 0 ? static_cast<double>(out.reward.spilled) / count : 0.0;
  if (out.reward.in_target > 0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < outcome.outcome.size(); ++i)
      if (outcome.outcome[i] == ParticleOutcome::InTarget)
        sum += out.reward.per_particle[i];
    out.mean_in_target_rp = sum / out.reward.in_target;
  }
  return out;
}

}  // namespace pourplan
