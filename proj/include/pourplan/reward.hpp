#pragma once

// Scene assembly and groundtruth pour rollouts. World convention: the target
// container sits at the origin and the source starts on the +x side, tilting
// counterclockwise so liquid leaves over the lip toward -x. Problem specs
// give the source's position relative to the target on the opposite side;
// assembly mirrors x (positions and target velocity) into this convention.
// The source pose's local origin is its lip; the target pose's local origin
// hovers a clearance above its opening center, so driving the pose gap to
// zero lands the lip at the ideal pouring point without contact.

#include <cmath>
#include <vector>

#include "pourplan/config.hpp"
#include "pourplan/container.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/outcomes.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/sim.hpp"
#include "pourplan/spline.hpp"
#include "pourplan/transform.hpp"

namespace pourplan {

struct Scene {
  Container source;
  Container target;
  Pose2 source_pose0;
  TargetTrack target_track;
  double theta_max = 0.0;
};

inline Scene build_scene(const ProblemSpec& p, const SceneConfig& cfg) {
  Scene s;
  s.source = make_source_container(p.source_shape, cfg);
  s.target = make_target_container(p.target_shape, cfg);
  s.source_pose0 = Pose2{-p.rel_position.x, p.rel_position.y, 0.0};
  s.target_track = TargetTrack{Pose2{0.0, 0.0, 0.0},
                               Vec2{-p.target_velocity.x, p.target_velocity.y}};
  s.theta_max = cfg.theta_max;
  return s;
}

struct RewardReport {
  double total = 0.0;
  std::vector<double> per_particle;
  int in_target = 0;
  int spilled = 0;
  int remaining = 0;

  int count() const { return in_target + spilled + remaining; }
  double scaled() const { return count() > 0 ? total / count() : 0.0; }
};

inline constexpr double kSpillPenalty = -100.0;

inline RewardReport score_outcomes(const OutcomeTracker::Result& r, double opening_half_width) {
  RewardReport rep;
  rep.per_particle.resize(r.outcome.size());
  for (std::size_t i = 0; i < r.outcome.size(); ++i) {
    double v = 0.0;
    switch (r.outcome[i]) {
      case ParticleOutcome::InTarget:
        v = (opening_half_width - r.cross_distance[i]) / opening_half_width;
        ++rep.in_target;
        break;
      case ParticleOutcome::Spilled:
        v = kSpillPenalty;
        ++rep.spilled;
        break;
      case ParticleOutcome::Remaining:
        v = 0.0;
        ++rep.remaining;
        break;
    }
    rep.per_particle[i] = v;
    rep.total += v;
  }
  return rep;
}

// One recorded frame of a rollout, sampled at the planner rate.
struct TraceFrame {
  double t = 0.0;
  LiquidState state;
  Pose2 source_pose;
  Pose2 target_pose;
  Vec2 source_velocity;
  double source_angular_rate = 0.0;
};

struct PourTrace {
  std::vector<TraceFrame> frames;
};

inline constexpr double kPlannerDt = 0.05;

// Drives the simulator along the spline for total_steps of caller_dt each,
// sub-stepping at the simulator's internal dt. Poses are sampled from the
// spline with theta clamped to [0, theta_max]; boundary velocities come from
// pose differences so they are consistent with the motion actually applied.
// Records a trace frame every planner interval (including t=0) when trace is
// non-null. Throws SimulationDiverged if the fluid blows up.
inline RewardReport pour_rollout(const Scene& scene, const ControlPoints& control,
                                 const ProblemSpec& problem, SimConfig sim_cfg,
                                 int total_steps, double caller_dt, PourTrace* trace) {
  sim_cfg.viscosity = problem.viscosity;
  sim_cfg.validate();
  const double sub_dt = sim_cfg.dt;
  const long subs_per_step = std::lround(caller_dt / sub_dt);
  if (subs_per_step < 1 || std::abs(subs_per_step * sub_dt - caller_dt) > 1e-9)
    throw std::invalid_argument("pour_rollout: caller_dt must be a multiple of sim dt");
  const long frame_stride = std::lround(kPlannerDt / sub_dt);

  auto pose_at = [&](double t) {
    Pose2 p = eval_spline(control, std::min(t, control.total_time));
    p.theta = std::clamp(p.theta, 0.0, scene.theta_max);
    return p;
  };

  FluidSim sim(sim_cfg);
  const std::array<double, 3> rate0 = eval_spline_velocity(control, 0.0);
  const Vec2 v0 = problem.velocity_mode == VelocityMode::Follow ? Vec2{rate0[0], rate0[1]}
                                                                : Vec2{0.0, 0.0};
  LiquidState liquid = FluidSim::init_liquid(scene.source, scene.source_pose0,
                                             problem.fill_level, problem.velocity_mode, v0,
                                             sim_cfg.particle_spacing);
  OutcomeTracker tracker(scene.source, scene.target, liquid.particles.size());

  const long total_subs = subs_per_step * total_steps;
  std::vector<Vec2> before(liquid.particles.size());
  Pose2 src_prev = pose_at(0.0);
  Pose2 tgt_prev = scene.target_track.at(0.0);

  auto record = [&](double t, Pose2 sp, Pose2 tp, Vec2 sv, double srate) {
    if (!trace) return;
    TraceFrame f;
    f.t = t;
    f.state = liquid;
    f.source_pose = sp;
    f.target_pose = tp;
    f.source_velocity = sv;
    f.source_angular_rate = srate;
    trace->frames.push_back(std::move(f));
  };
  {
    const Pose2 nxt = pose_at(sub_dt);
    record(0.0, src_prev, tgt_prev, Vec2{(nxt.x - src_prev.x) / sub_dt, (nxt.y - src_prev.y) / sub_dt},
           (nxt.theta - src_prev.theta) / sub_dt);
  }

  for (long s = 1; s <= total_subs; ++s) {
    const double t = static_cast<double>(s) * sub_dt;
    const Pose2 src_next = pose_at(t);
    const Pose2 tgt_next = scene.target_track.at(t);
    RigidBodyState src_body{&scene.source, src_next,
                            Vec2{(src_next.x - src_prev.x) / sub_dt,
                                 (src_next.y - src_prev.y) / sub_dt},
                            (src_next.theta - src_prev.theta) / sub_dt};
    RigidBodyState tgt_body{&scene.target, tgt_next, scene.target_track.velocity, 0.0};

    for (std::size_t i = 0; i < liquid.particles.size(); ++i)
      before[i] = liquid.particles[i].position;
    sim.step(liquid, &src_body, &tgt_body);
    tracker.observe(before, tgt_prev, liquid, tgt_next);

    if (s % frame_stride == 0)
      record(t, src_next, tgt_next, src_body.velocity, src_body.angular_rate);
    src_prev = src_next;
    tgt_prev = tgt_next;
  }

  const auto outcome = tracker.classify(liquid, src_prev, tgt_prev);
  return score_outcomes(outcome, scene.target.opening_half_width);
}

// Full groundtruth evaluation of one candidate in transformed coordinates.
inline RewardReport pour_reward(const ProblemSpec& problem, const TransformedCoords& coords,
                                const SceneConfig& scene_cfg, const SimConfig& sim_cfg,
                                int total_steps, double caller_dt, PourTrace* trace = nullptr) {
  const Scene scene = build_scene(problem, scene_cfg);
  const double total_time = total_steps * caller_dt;
  const ControlPoints control =
      from_transformed(coords, scene.source_pose0, scene.target_track, scene.theta_max,
                       total_time);
  return pour_rollout(scene, control, problem, sim_cfg, total_steps, caller_dt, trace);
}

}  // namespace pourplan
