#pragma once

// Receding-horizon feedback planner. Each tick: roll the network's
// trajectory prior forward K steps from the frozen liquid observation,
// collect per-step outflow-curve predictions, then minimize a composite cost
// over the K future poses with a quasi-Newton solve warm-started at the
// prior. Only the first optimized pose is adopted.
//
// Cost per horizon step k (raw terms; weights applied in the total):
//   liquid : miss_k^2 * max(rho_k, 0), miss = outflow curve vs opening center
//   prior  : |pose_k - prior_k|^2
//   smooth : |pose_k - 2 pose_{k-1} + pose_{k-2}|^2 (anchored at the current
//            and previous adopted poses)
//   collide: D_k^2 + ((D_k - D_{k-1})/dt)^2, D = penetration of the source's
//            wall sampling against padded obstacle spheres
// Prior and smooth gradients are analytic; miss and D derivatives come from
// per-coordinate central differences (both depend on one pose each).

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "pourplan/container.hpp"
#include "pourplan/features.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/lbfgs.hpp"
#include "pourplan/mlp.hpp"
#include "pourplan/outflow.hpp"
#include "pourplan/transform.hpp"

namespace pourplan {

struct PlannerConfig {
  int horizon = 25;  // K
  double dt = 0.05;
  double w_liquid = 1.0;
  double w_prior = 1.0;
  double w_smooth = 10.0;
  double w_collide = 100.0;
  double gravity = 9.8;
  double theta_max = 0.75 * kPi;
  double collide_padding = 0.02;
  double fd_epsilon = 1e-6;
  LbfgsOptions lbfgs{8, 50, 1e-6};

  void validate() const {
    if (horizon < 2) throw std::invalid_argument("PlannerConfig: horizon must be >= 2");
    if (dt <= 0.0) throw std::invalid_argument("PlannerConfig: dt must be positive");
    if (w_liquid < 0 || w_prior < 0 || w_smooth < 0 || w_collide < 0)
      throw std::invalid_argument("PlannerConfig: weights must be >= 0");
  }
};

struct PriorRollout {
  std::vector<Pose2> poses;          // S'(t + k dt), k = 1..K
  std::vector<OutflowCurve> curves;  // prediction attached to step k
  std::vector<double> ref_theta;     // source angle the prediction was made at
};

// Iterates the prior head K steps with the liquid observation frozen at time
// t; rigid-pose inputs advance along the rollout. Monotone by construction
// of the per-interval transform update.
inline PriorRollout rollout_prior(const MlpParams& params, const std::vector<double>& stack,
                                  Pose2 source_now, const TargetTrack& track, double t_now,
                                  int horizon, double dt, double theta_max) {
  PriorRollout r;
  r.poses.reserve(horizon);
  r.curves.reserve(horizon);
  r.ref_theta.reserve(horizon);
  Pose2 tgt_prev = track.at(t_now);
  const double sign_x = detail::sign_of(source_now.x - tgt_prev.x);
  const double sign_y = detail::sign_of(source_now.y - tgt_prev.y);
  Pose2 cur = source_now;
  for (int k = 1; k <= horizon; ++k) {
    const std::vector<double> in =
        build_model_input(params.kind, stack, cur, tgt_prev, track.velocity);
    const MlpOutput out = forward(
        params, Eigen::Map<const Eigen::VectorXd>(in.data(),
                                                  static_cast<Eigen::Index>(in.size())));
    OutflowCurve c;
    c.p_local = Vec2{out.curve[0], out.curve[1]};
    c.v = Vec2{out.curve[2], out.curve[3]};
    c.rho = out.curve[4];
    r.curves.push_back(c);
    r.ref_theta.push_back(cur.theta);

    const Pose2 tgt_next = track.at(t_now + k * dt);
    cur = step_transformed(cur, {out.prior[0], out.prior[1], out.prior[2]}, tgt_prev,
                           tgt_next, theta_max, sign_x, sign_y);
    r.poses.push_back(cur);
    tgt_prev = tgt_next;
  }
  return r;
}

// Distance between the ballistic curve from p with velocity v and the target
// opening center: |x(s*) - center_x| at the earliest downward-consistent
// crossing of the opening height, else the closest 2D approach to the center
// over s in [0, 5].
inline double curve_miss_distance(const Container& target, Pose2 target_pose, Vec2 p_world,
                                  Vec2 v, double g) {
  const Vec2 oc = target_pose.to_world(target.opening_center_local);
  const double dy = p_world.y - oc.y;
  const double disc = v.y * v.y + 2.0 * g * dy;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    const double s1 = (v.y - sq) / g;
    const double s2 = (v.y + sq) / g;
    double s = -1.0;
    if (s1 >= 0.0) s = s1;
    else if (s2 >= 0.0) s = s2;
    if (s >= 0.0) return std::abs(p_world.x + v.x * s - oc.x);
  }
  // No crossing: closest approach to the center point.
  const double s_max = 5.0;
  double best_s = 0.0, best_d = norm_sq(p_world - oc);
  for (int k = 1; k <= 40; ++k) {
    const double s = s_max * k / 40.0;
    const Vec2 q{p_world.x + v.x * s, p_world.y + v.y * s - 0.5 * g * s * s};
    const double d = norm_sq(q - oc);
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  double s = best_s;
  for (int it = 0; it < 8; ++it) {
    const Vec2 q{p_world.x + v.x * s, p_world.y + v.y * s - 0.5 * g * s * s};
    const Vec2 dq{v.x, v.y - g * s};
    const Vec2 r = q - oc;
    const double grad = 2.0 * dot(r, dq);
    const double hess = 2.0 * (norm_sq(dq) - r.y * g);
    if (hess <= 1e-12) break;
    s = std::clamp(s - grad / hess, 0.0, s_max);
  }
  const Vec2 q{p_world.x + v.x * s, p_world.y + v.y * s - 0.5 * g * s * s};
  return norm(q - oc);
}

struct PlanContext {
  const PriorRollout* prior = nullptr;
  const Container* source = nullptr;
  const Container* target = nullptr;
  TargetTrack track;
  double t_now = 0.0;
  std::vector<Sphere> obstacles;  // world frame, unpadded
  Pose2 anchor0;                  // S(t), adopted at the previous tick
  Pose2 anchor1;                  // S(t - dt)
  bool first_call = false;        // no previous adopted pose: collide rate at k=1 is 0
};

struct ObjectiveBreakdown {
  double liquid = 0.0;
  double prior = 0.0;
  double smooth = 0.0;
  double collide = 0.0;
};

namespace detail {

inline double& pose_coord(Pose2& p, int c) { return c == 0 ? p.x : (c == 1 ? p.y : p.theta); }

inline double source_penetration(const Container& source, Pose2 pose,
                                 const std::vector<Sphere>& obstacles, double padding) {
  if (obstacles.empty()) return 0.0;
  std::vector<Sphere> world = transform_spheres(source.local_spheres, pose);
  std::vector<Sphere> padded = obstacles;
  for (Sphere& s : padded) s.radius += padding;
  return penetration_depth(world, padded);
}

inline double liquid_term(const PlanContext& ctx, const PlannerConfig& cfg, int k, Pose2 pose) {
  const OutflowCurve& c = ctx.prior->curves[k];
  const double rho = std::max(c.rho, 0.0);
  if (rho <= 0.0) return 0.0;
  const Vec2 p_world = pose.to_world(c.p_local);
  const Vec2 v = rotate(c.v, pose.theta - ctx.prior->ref_theta[k]);
  const Pose2 tgt = ctx.track.at(ctx.t_now + (k + 1) * cfg.dt);
  const double miss = curve_miss_distance(*ctx.target, tgt, p_world, v, cfg.gravity);
  return miss * miss * rho;
}

}  // namespace detail

// Composite cost and its gradient over the flattened poses (x, y, theta per
// horizon step). The reported breakdown holds raw (unweighted) term sums.
inline double planner_objective(const std::vector<Pose2>& poses, const PlanContext& ctx,
                                const PlannerConfig& cfg, Eigen::VectorXd* grad,
                                ObjectiveBreakdown* breakdown) {
  const int K = static_cast<int>(poses.size());
  if (K < 1 || !ctx.prior || static_cast<int>(ctx.prior->poses.size()) < K)
    throw std::invalid_argument("planner_objective: malformed context");
  const double dt = cfg.dt;

  auto pose_at = [&](int k) -> Pose2 {  // k ranges over [-2, K-1]
    if (k >= 0) return poses[k];
    return k == -1 ? ctx.anchor0 : ctx.anchor1;
  };
  auto d_at = [&](Pose2 pose) {
    return detail::source_penetration(*ctx.source, pose, ctx.obstacles, cfg.collide_padding);
  };

  std::vector<double> liq(K), dpen(K + 1);
  dpen[0] = ctx.first_call ? 0.0 : d_at(ctx.anchor0);
  for (int k = 0; k < K; ++k) {
    liq[k] = detail::liquid_term(ctx, cfg, k, poses[k]);
    dpen[k + 1] = d_at(poses[k]);
  }
  if (ctx.first_call) dpen[0] = dpen[1];  // zero rate at the first step

  ObjectiveBreakdown bd;
  for (int k = 0; k < K; ++k) {
    bd.liquid += liq[k];
    const Pose2 d = poses[k] - ctx.prior->poses[k];
    bd.prior += d.x * d.x + d.y * d.y + d.theta * d.theta;
    const Pose2 lap = pose_at(k) - pose_at(k - 1) * 2.0 + pose_at(k - 2);
    bd.smooth += lap.x * lap.x + lap.y * lap.y + lap.theta * lap.theta;
    const double rate = (dpen[k + 1] - dpen[k]) / dt;
    bd.collide += dpen[k + 1] * dpen[k + 1] + rate * rate;
  }
  const double total = cfg.w_liquid * bd.liquid + cfg.w_prior * bd.prior +
                       cfg.w_smooth * bd.smooth + cfg.w_collide * bd.collide;
  if (breakdown) *breakdown = bd;
  if (!grad) return total;

  grad->setZero(3 * K);
  auto add = [&](int k, double gx, double gy, double gth) {
    if (k < 0 || k >= K) return;
    (*grad)[3 * k] += gx;
    (*grad)[3 * k + 1] += gy;
    (*grad)[3 * k + 2] += gth;
  };
  for (int k = 0; k < K; ++k) {
    // Analytic: prior and the three smoothness stencils touching pose k.
    const Pose2 dp = poses[k] - ctx.prior->poses[k];
    add(k, 2.0 * cfg.w_prior * dp.x, 2.0 * cfg.w_prior * dp.y, 2.0 * cfg.w_prior * dp.theta);
    for (int j = k; j <= k + 2 && j < K; ++j) {
      const Pose2 lap = pose_at(j) - pose_at(j - 1) * 2.0 + pose_at(j - 2);
      const double c = (j == k) ? 1.0 : (j == k + 1 ? -2.0 : 1.0);
      add(k, 2.0 * cfg.w_smooth * c * lap.x, 2.0 * cfg.w_smooth * c * lap.y,
          2.0 * cfg.w_smooth * c * lap.theta);
    }
    // Finite differences for the curve miss and penetration, one coordinate
    // of pose k at a time; both depend on pose k alone.
    const double rate_k = (dpen[k + 1] - dpen[k]) / dt;
    const double rate_n = k + 1 < K ? (dpen[k + 2] - dpen[k + 1]) / dt : 0.0;
    const bool want_liquid = ctx.prior->curves[k].rho > 0.0 && cfg.w_liquid > 0.0;
    const bool want_collide = !ctx.obstacles.empty() && cfg.w_collide > 0.0;
    if (!want_liquid && !want_collide) continue;
    for (int c = 0; c < 3; ++c) {
      Pose2 hi = poses[k], lo = poses[k];
      detail::pose_coord(hi, c) += cfg.fd_epsilon;
      detail::pose_coord(lo, c) -= cfg.fd_epsilon;
      double g_total = 0.0;
      if (want_liquid) {
        const double dl =
            (detail::liquid_term(ctx, cfg, k, hi) - detail::liquid_term(ctx, cfg, k, lo)) /
            (2.0 * cfg.fd_epsilon);
        g_total += cfg.w_liquid * dl;
      }
      if (want_collide) {
        const double dd = (d_at(hi) - d_at(lo)) / (2.0 * cfg.fd_epsilon);
        // first_call && k == 0: dpen[0] tracks dpen[1], the rate term is
        // identically zero, so its derivative contribution drops.
        double gc = 2.0 * dpen[k + 1] * dd;
        if (!(ctx.first_call && k == 0)) gc += 2.0 * rate_k * dd / dt;
        if (k + 1 < K) gc -= 2.0 * rate_n * dd / dt;
        g_total += cfg.w_collide * gc;
      }
      add(k, c == 0 ? g_total : 0.0, c == 1 ? g_total : 0.0, c == 2 ? g_total : 0.0);
    }
  }
  return total;
}

struct HorizonDecision {
  std::vector<Pose2> poses;
  Pose2 adopted;
  ObjectiveBreakdown breakdown;
  double objective = 0.0;
  bool degraded = false;
  int solver_iterations = 0;
};

inline HorizonDecision plan_step(const MlpParams& params, const std::vector<double>& stack,
                                 const PlanContext& base_ctx, const PlannerConfig& cfg) {
  cfg.validate();
  PlanContext ctx = base_ctx;
  const PriorRollout rollout = rollout_prior(params, stack, ctx.anchor0, ctx.track,
                                             ctx.t_now, cfg.horizon, cfg.dt, cfg.theta_max);
  ctx.prior = &rollout;

  const int K = cfg.horizon;
  Eigen::VectorXd x0(3 * K);
  for (int k = 0; k < K; ++k) {
    x0[3 * k] = rollout.poses[k].x;
    x0[3 * k + 1] = rollout.poses[k].y;
    x0[3 * k + 2] = rollout.poses[k].theta;
  }
  std::vector<Pose2> scratch(K);
  auto unpack = [&](const Eigen::VectorXd& x) {
    for (int k = 0; k < K; ++k) scratch[k] = Pose2{x[3 * k], x[3 * k + 1], x[3 * k + 2]};
  };
  auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    unpack(x);
    return planner_objective(scratch, ctx, cfg, &g, nullptr);
  };
  const LbfgsResult sol = lbfgs_minimize(fn, x0, cfg.lbfgs);

  HorizonDecision out;
  out.degraded = sol.failed;
  out.solver_iterations = sol.iterations;
  const Eigen::VectorXd& xs = sol.failed ? x0 : sol.x;
  out.poses.resize(K);
  for (int k = 0; k < K; ++k)
    out.poses[k] = Pose2{xs[3 * k], xs[3 * k + 1], xs[3 * k + 2]};
  out.objective = planner_objective(out.poses, ctx, cfg, nullptr, &out.breakdown);
  out.adopted = out.poses[0];
  out.adopted.theta = std::clamp(out.adopted.theta, 0.0, cfg.theta_max);
  return out;
}

}  // namespace pourplan
