// Command-line front end: dataset generation, training, streaming planning,
// benchmark evaluation, parameter sweeps, and trajectory replay with particle
// snapshots. Every subcommand is deterministic for a fixed --seed, except for
// the wall-clock timing columns in evaluation reports, which are
// measurements.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pourplan/pourplan.hpp"

namespace pp = pourplan;

namespace {

int cmd_gen_dataset(const std::string& variant, int problems, int iters, int pop, int steps,
                    std::uint64_t seed, const std::string& out_path) {
  pp::DatagenConfig cfg;
  cfg.variant = pp::parse_velocity_mode(variant);
  cfg.problems = problems;
  cfg.iterations = iters;
  cfg.population = pop;
  cfg.steps = steps;
  cfg.seed = seed;
  pp::DatagenLog log;
  const pp::Dataset d = pp::generate_dataset(cfg, &log);
  pp::write_dataset(out_path, d);
  std::printf("kept %d of %d problems, %zu samples -> %s\n", log.kept_count(), problems,
              d.sample_count(), out_path.c_str());
  for (const auto& e : log.entries) {
    if (e.kept)
      std::printf("  problem %d (seed %llu): reward %.3f\n", e.index,
                  static_cast<unsigned long long>(e.problem_seed), e.scaled_reward);
    else
      std::printf("  problem %d (seed %llu): skipped, %s\n", e.index,
                  static_cast<unsigned long long>(e.problem_seed), e.reason.c_str());
  }
  return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& feature, int epochs,
              std::uint64_t seed, const std::string& out_path) {
  const pp::Dataset d = pp::read_dataset(dataset_path);
  std::vector<pp::PourSample> samples;
  for (const pp::TrajectoryRecord& t : d.trajectories)
    samples.insert(samples.end(), t.samples.begin(), t.samples.end());
  if (samples.empty()) {
    std::fprintf(stderr, "error: dataset holds no samples\n");
    return 1;
  }
  const pp::ModelInputKind kind = feature == "heightfield" ? pp::ModelInputKind::Heightfield
                                                           : pp::ModelInputKind::Lip;
  pp::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  pp::TrainOutput trained = pp::train(samples, kind, cfg);
  trained.params.trained_variant = d.meta.variant;
  pp::write_params(out_path, trained.params);

  const pp::AccuracyReport acc =
      pp::evaluate_accuracy(trained.params, samples, pp::SceneConfig{}.theta_max);
  std::printf("trained on %zu samples (%s), %d epochs\n", samples.size(), feature.c_str(),
              epochs);
  std::printf("final train loss %.6g", trained.train_loss.back());
  if (!trained.val_loss.empty()) std::printf(", val loss %.6g", trained.val_loss.back());
  std::printf("\nmean relative error: curve %.4f (%d samples), prior %.4f (%d samples)\n",
              acc.mean_curve_err, acc.curve_samples, acc.mean_prior_err, acc.prior_samples);
  std::printf("params -> %s\n", out_path.c_str());
  return 0;
}

// Stream protocol: one observation per line on stdin,
//   hf[0..31] lip sx sy stheta
// one adopted pose "x y theta" per line on stdout. Lines advance planner time
// by one tick; the previous line's pose is remembered as the earlier anchor.
int cmd_plan(const std::string& params_path, const std::string& problem_path,
             const std::vector<std::string>& obstacle_specs) {
  const pp::MlpParams params = pp::read_params(params_path);
  const pp::ProblemSpec problem = pp::read_problem(problem_path);
  const pp::SceneConfig scene_cfg;
  const pp::Scene scene = pp::build_scene(problem, scene_cfg);
  pp::PlannerConfig planner_cfg;
  planner_cfg.theta_max = scene.theta_max;

  std::vector<pp::Sphere> obstacles;
  for (const std::string& spec : obstacle_specs) {
    pp::Sphere s;
    char comma;
    std::istringstream ss(spec);
    if (!(ss >> s.center.x >> comma >> s.center.y >> comma >> s.radius)) {
      std::fprintf(stderr, "error: bad obstacle '%s', want x,y,r\n", spec.c_str());
      return 1;
    }
    obstacles.push_back(s);
  }

  pp::FeatureHistory history;
  pp::Pose2 prev_adopted = scene.source_pose0;
  bool first = true;
  long tick = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    pp::FeatureFrame frame;
    frame.heightfield_samples.resize(pp::kHeightfieldBins);
    for (double& v : frame.heightfield_samples)
      if (!(ss >> v)) break;
    pp::Pose2 cur;
    if (!(ss >> frame.lip >> cur.x >> cur.y >> cur.theta)) {
      std::fprintf(stderr, "error: observation line %ld needs %d values\n", tick + 1,
                   pp::kHeightfieldBins + 4);
      return 1;
    }
    history.push(std::move(frame));

    pp::PlanContext ctx;
    ctx.source = &scene.source;
    ctx.target = &scene.target;
    ctx.track = scene.target_track;
    ctx.t_now = tick * planner_cfg.dt;
    ctx.obstacles = obstacles;
    ctx.anchor0 = cur;
    ctx.anchor1 = first ? cur : prev_adopted;
    ctx.first_call = first;

    const std::vector<double> stack = params.kind == pp::ModelInputKind::Heightfield
                                          ? history.stacked_heightfield()
                                          : history.stacked_lip();
    const pp::HorizonDecision d = pp::plan_step(params, stack, ctx, planner_cfg);
    std::printf("%.17g %.17g %.17g\n", d.adopted.x, d.adopted.y, d.adopted.theta);
    std::fflush(stdout);
    prev_adopted = cur;
    first = false;
    ++tick;
  }
  return 0;
}

int cmd_eval(const std::string& params_path, int problems, std::uint64_t seed,
             const std::string& report_path) {
  const pp::MlpParams params = pp::read_params(params_path);
  pp::EpisodeConfig cfg;
  const pp::BenchmarkReport report = pp::evaluate_benchmark(params, problems, cfg, seed);
  if (report_path.empty())
    pp::write_benchmark_csv(std::cout, report);
  else
    pp::write_benchmark_csv(report_path, report);
  std::fprintf(stderr, "evaluated %zu problems, %d failed, mean spill %.4f, mean R_p %.4f\n",
               report.rows.size(), report.failed_count, report.mean_spill_fraction,
               report.mean_in_target_rp);
  return 0;
}

int cmd_sweep_viscosity(const std::string& params_path, const std::string& mu_csv,
                        int problems, std::uint64_t seed, const std::string& report_path) {
  const pp::MlpParams params = pp::read_params(params_path);
  std::vector<double> mus;
  std::stringstream ss(mu_csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) mus.push_back(std::stod(tok));
  pp::EpisodeConfig cfg;
  const pp::SweepReport sweep = pp::sweep_viscosity(params, mus, problems, cfg, seed);
  if (report_path.empty())
    pp::write_sweep_csv(std::cout, sweep);
  else
    pp::write_sweep_csv(report_path, sweep);
  return 0;
}

int cmd_sweep_shape(const std::string& params_path, const std::string& shapes_csv,
                    int problems, std::uint64_t seed, const std::string& report_path) {
  const pp::MlpParams params = pp::read_params(params_path);
  std::vector<pp::ShapeTag> shapes;
  std::stringstream ss(shapes_csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) shapes.push_back(pp::parse_shape(tok));
  pp::EpisodeConfig cfg;
  const pp::SweepReport sweep = pp::sweep_shape(params, shapes, problems, cfg, seed);
  if (report_path.empty())
    pp::write_sweep_csv(std::cout, sweep);
  else
    pp::write_sweep_csv(report_path, sweep);
  return 0;
}

int cmd_sim(const std::string& problem_path, const std::string& trajectory_path,
            int snapshot_every, const std::string& out_prefix) {
  const pp::ProblemSpec problem = pp::read_problem(problem_path);
  const auto rows = pp::read_trajectory(trajectory_path);
  if (rows.size() != pp::kControlPoints) {
    std::fprintf(stderr, "error: trajectory file must hold exactly %d control poses\n",
                 pp::kControlPoints);
    return 1;
  }
  pp::ControlPoints control;
  control.total_time = rows.back()[0];
  for (int i = 0; i < pp::kControlPoints; ++i)
    control.poses[i] = pp::Pose2{rows[i][1], rows[i][2], rows[i][3]};

  const pp::SceneConfig scene_cfg;
  const pp::Scene scene = pp::build_scene(problem, scene_cfg);
  const double caller_dt = 0.01;
  const int steps = static_cast<int>(std::lround(control.total_time / caller_dt));
  pp::PourTrace trace;
  const pp::RewardReport reward = pp::pour_rollout(scene, control, problem, pp::SimConfig{},
                                                   steps, caller_dt, &trace);
  int written = 0;
  for (std::size_t f = 0; f < trace.frames.size(); f += snapshot_every) {
    std::ostringstream name;
    name << out_prefix << "_" << written << ".txt";
    std::ofstream out(name.str());
    if (!out) {
      std::fprintf(stderr, "error: cannot write %s\n", name.str().c_str());
      return 1;
    }
    pp::write_snapshot(out, trace.frames[f].state);
    ++written;
  }
  std::printf("simulated %d steps, %d particles: %d in target, %d spilled, %d remaining\n",
              steps, reward.count(), reward.in_target, reward.spilled, reward.remaining);
  std::printf("reward total %.3f (scaled %.4f), %d snapshots -> %s_*.txt\n", reward.total,
              reward.scaled(), written, out_prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D liquid pouring: data generation, training, planning, evaluation"};
  app.require_subcommand(1);

  // gen-dataset
  std::string gd_variant = "follow", gd_out = "dataset.txt";
  int gd_problems = 10, gd_iters = 40, gd_pop = 16, gd_steps = 250;
  std::uint64_t gd_seed = 0;
  CLI::App* gen = app.add_subcommand("gen-dataset", "search pouring trajectories and record samples");
  gen->add_option("--variant", gd_variant, "initial liquid velocity: follow|zero")
      ->check(CLI::IsMember({"follow", "zero"}));
  gen->add_option("--problems", gd_problems, "number of problems");
  gen->add_option("--iters", gd_iters, "optimizer generations per problem");
  gen->add_option("--pop", gd_pop, "optimizer population size");
  gen->add_option("--steps", gd_steps, "rollout steps of 0.01 s");
  gen->add_option("--seed", gd_seed, "base seed");
  gen->add_option("--out", gd_out, "output dataset path");

  // train
  std::string tr_dataset, tr_feature = "heightfield", tr_out = "params.bin";
  int tr_epochs = 200;
  std::uint64_t tr_seed = 0;
  CLI::App* tr = app.add_subcommand("train", "fit the prediction network to a dataset");
  tr->add_option("--dataset", tr_dataset, "dataset path")->required();
  tr->add_option("--feature", tr_feature, "observation kind: heightfield|lip")
      ->check(CLI::IsMember({"heightfield", "lip"}));
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--out", tr_out, "output params path");

  // plan
  std::string pl_params, pl_problem;
  bool pl_stream = false;
  std::vector<std::string> pl_obstacles;
  CLI::App* pl = app.add_subcommand("plan", "streaming planner: observations in, poses out");
  pl->add_option("--params", pl_params, "trained params path")->required();
  pl->add_option("--problem-spec", pl_problem, "problem spec path")->required();
  pl->add_flag("--stream", pl_stream, "read observation lines from stdin");
  pl->add_option("--obstacle", pl_obstacles, "obstacle sphere x,y,r (repeatable)");

  // eval
  std::string ev_params, ev_report;
  int ev_problems = 10;
  std::uint64_t ev_seed = pp::kHeldOutSeedBase;
  CLI::App* ev = app.add_subcommand("eval", "run closed-loop episodes on held-out problems");
  ev->add_option("--params", ev_params, "trained params path")->required();
  ev->add_option("--problems", ev_problems, "number of held-out problems");
  ev->add_option("--seed", ev_seed, "held-out seed base (>= 1000000)");
  ev->add_option("--report", ev_report, "CSV output path (default: stdout)");

  // sweep-viscosity
  std::string sv_params, sv_mu = "0.001,0.005,0.025,0.125", sv_report;
  int sv_problems = 10;
  std::uint64_t sv_seed = pp::kHeldOutSeedBase;
  CLI::App* sv = app.add_subcommand("sweep-viscosity", "evaluate one model across fluids");
  sv->add_option("--params", sv_params, "trained params path")->required();
  sv->add_option("--mu", sv_mu, "comma list of dynamic viscosities, ascending");
  sv->add_option("--problems", sv_problems, "problems per condition");
  sv->add_option("--seed", sv_seed, "held-out seed base (>= 1000000)");
  sv->add_option("--report", sv_report, "CSV output path (default: stdout)");

  // sweep-shape
  std::string sh_params, sh_shapes = "rect,conic,curved", sh_report;
  int sh_problems = 10;
  std::uint64_t sh_seed = pp::kHeldOutSeedBase;
  CLI::App* sh = app.add_subcommand("sweep-shape", "evaluate one model across source shapes");
  sh->add_option("--params", sh_params, "trained params path")->required();
  sh->add_option("--shapes", sh_shapes, "comma list of source shapes");
  sh->add_option("--problems", sh_problems, "problems per condition");
  sh->add_option("--seed", sh_seed, "held-out seed base (>= 1000000)");
  sh->add_option("--report", sh_report, "CSV output path (default: stdout)");

  // sim
  std::string sm_problem, sm_trajectory, sm_out = "snapshot";
  int sm_every = 10;
  CLI::App* sm = app.add_subcommand("sim", "replay a control trajectory and dump snapshots");
  sm->add_option("--problem-spec", sm_problem, "problem spec path")->required();
  sm->add_option("--trajectory", sm_trajectory, "control pose file: 6 lines of t x y theta")
      ->required();
  sm->add_option("--snapshot-every", sm_every, "planner frames between snapshots")
      ->check(CLI::PositiveNumber);
  sm->add_option("--out", sm_out, "snapshot file prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_dataset(gd_variant, gd_problems, gd_iters, gd_pop, gd_steps, gd_seed,
                             gd_out);
    if (tr->parsed()) return cmd_train(tr_dataset, tr_feature, tr_epochs, tr_seed, tr_out);
    if (pl->parsed()) {
      if (!pl_stream) {
        std::fprintf(stderr, "error: plan requires --stream\n");
        return 1;
      }
      return cmd_plan(pl_params, pl_problem, pl_obstacles);
    }
    if (ev->parsed()) return cmd_eval(ev_params, ev_problems, ev_seed, ev_report);
    if (sv->parsed())
      return cmd_sweep_viscosity(sv_params, sv_mu, sv_problems, sv_seed, sv_report);
    if (sh->parsed())
      return cmd_sweep_shape(sh_params, sh_shapes, sh_problems, sh_seed, sh_report);
    if (sm->parsed()) return cmd_sim(sm_problem, sm_trajectory, sm_every, sm_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
