#pragma once

// Benchmark evaluation of trained planner parameters on held-out problems,
// plus the viscosity and container-shape sweeps. Held-out problems come from
// a seed interval starting at 10^6 so they cannot collide with dataset
// problem seeds (which count up from the dataset base seed). Failed episodes
// stay in the report, marked, and are excluded from the aggregates.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pourplan/container.hpp"
#include "pourplan/episode.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/mlp.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/util.hpp"

namespace pourplan {

inline constexpr std::uint64_t kHeldOutSeedBase = 1000000;

struct BenchmarkRow {
  int index = 0;
  ProblemSpec problem;
  bool failed = false;
  std::string diagnostic;
  double spill_fraction = 0.0;
  double mean_in_target_rp = 0.0;
  int in_target = 0;
  int spilled = 0;
  int remaining = 0;
  double wall_ms = 0.0;
  double plan_p50_ms = 0.0;
  double plan_p90_ms = 0.0;
  double plan_p99_ms = 0.0;
  double plan_max_ms = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  int failed_count = 0;
  double mean_spill_fraction = 0.0;  // over non-failed rows
  double mean_in_target_rp = 0.0;    // over non-failed rows

  void recompute_aggregates() {
    failed_count = 0;
    double spill = 0.0, rp = 0.0;
    int ok = 0;
    for (const BenchmarkRow& r : rows) {
      if (r.failed) {
        ++failed_count;
        continue;
      }
      spill += r.spill_fraction;
      rp += r.mean_in_target_rp;
      ++ok;
    }
    mean_spill_fraction = ok > 0 ? spill / ok : 0.0;
    mean_in_target_rp = ok > 0 ? rp / ok : 0.0;
  }
};

// Samples the i-th held-out problem, paired with the variant the parameters
// were trained on.
inline ProblemSpec held_out_problem(int index, const MlpParams& params,
                                    const SceneConfig& scene,
                                    std::uint64_t seed_base = kHeldOutSeedBase) {
  if (seed_base < kHeldOutSeedBase)
    throw std::invalid_argument("held_out_problem: seed base below the held-out range");
  ProblemSpec p = sample_problem(seed_base + static_cast<std::uint64_t>(index),
                                 fill_grid_value(index, scene), scene);
  p.velocity_mode = params.trained_variant;
  return p;
}

inline BenchmarkReport evaluate_benchmark(const MlpParams& params, int n_problems,
                                          const EpisodeConfig& episode_cfg,
                                          std::uint64_t seed_base = kHeldOutSeedBase) {
  if (n_problems < 0)
    throw std::invalid_argument("evaluate_benchmark: negative problem count");
  BenchmarkReport report;
  report.rows.resize(n_problems);
  parallel_for(static_cast<std::size_t>(n_problems), [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    BenchmarkRow& row = report.rows[idx];
    row.index = i;
    row.problem = held_out_problem(i, params, episode_cfg.scene, seed_base);
    row.problem.viscosity = episode_cfg.sim.viscosity;

    Stopwatch watch;
    const EpisodeResult res = run_episode(row.problem, params, episode_cfg);
    row.wall_ms = watch.elapsed_ms();
    row.failed = res.failed;
    row.diagnostic = res.diagnostic;
    if (res.failed) return;
    row.spill_fraction = res.spill_fraction;
    row.mean_in_target_rp = res.mean_in_target_rp;
    row.in_target = res.reward.in_target;
    row.spilled = res.reward.spilled;
    row.remaining = res.reward.remaining;
    if (!res.plan_times_ms.empty()) {
      row.plan_p50_ms = percentile(res.plan_times_ms, 50.0);
      row.plan_p90_ms = percentile(res.plan_times_ms, 90.0);
      row.plan_p99_ms = percentile(res.plan_times_ms, 99.0);
      row.plan_max_ms = percentile(res.plan_times_ms, 100.0);
    }
  });
  report.recompute_aggregates();
  return report;
}

inline void write_benchmark_csv(std::ostream& out, const BenchmarkReport& r) {
  out.precision(17);
  out << "index,seed,rel_x,rel_y,target_vx,target_vy,fill,mode,source_shape,target_shape,"
         "viscosity,failed,spill_fraction,mean_in_target_rp,in_target,spilled,remaining,"
         "wall_ms,plan_p50_ms,plan_p90_ms,plan_p99_ms,plan_max_ms\n";
  for (const BenchmarkRow& row : r.rows) {
    const ProblemSpec& p = row.problem;
    out << row.index << "," << p.seed << "," << p.rel_position.x << "," << p.rel_position.y
        << "," << p.target_velocity.x << "," << p.target_velocity.y << "," << p.fill_level
        << "," << velocity_mode_name(p.velocity_mode) << "," << shape_name(p.source_shape)
        << "," << shape_name(p.target_shape) << "," << p.viscosity << ","
        << (row.failed ? 1 : 0) << "," << row.spill_fraction << "," << row.mean_in_target_rp
        << "," << row.in_target << "," << row.spilled << "," << row.remaining << ","
        << row.wall_ms << "," << row.plan_p50_ms << "," << row.plan_p90_ms << ","
        << row.plan_p99_ms << "," << row.plan_max_ms << "\n";
  }
  out << "#aggregate problems=" << r.rows.size() << " failed=" << r.failed_count
      << " mean_spill_fraction=" << r.mean_spill_fraction
      << " mean_in_target_rp=" << r.mean_in_target_rp << "\n";
}

inline void write_benchmark_csv(const std::string& path, const BenchmarkReport& r) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write report: " + path);
  write_benchmark_csv(out, r);
  if (!out) throw FileFormatError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Sweeps: same trained parameters, one benchmark per condition.

struct SweepRow {
  std::string condition;
  BenchmarkReport report;
};

struct SweepReport {
  std::string variable;  // "viscosity" or "source_shape"
  std::vector<SweepRow> rows;
};

inline SweepReport sweep_viscosity(const MlpParams& params, const std::vector<double>& mus,
                                   int n_problems, const EpisodeConfig& base_cfg,
                                   std::uint64_t seed_base = kHeldOutSeedBase) {
  if (mus.empty()) throw std::invalid_argument("sweep_viscosity: empty viscosity list");
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (!(mus[i] > 0.0))
      throw std::invalid_argument("sweep_viscosity: viscosities must be positive");
    if (i > 0 && !(mus[i] > mus[i - 1]))
      throw std::invalid_argument("sweep_viscosity: viscosities must be ascending");
  }
  SweepReport sweep;
  sweep.variable = "viscosity";
  for (double mu : mus) {
    EpisodeConfig cfg = base_cfg;
    cfg.sim.viscosity = mu;
    SweepRow row;
    std::ostringstream label;
    label << mu;
    row.condition = label.str();
    row.report = evaluate_benchmark(params, n_problems, cfg, seed_base);
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

inline SweepReport sweep_shape(const MlpParams& params, const std::vector<ShapeTag>& shapes,
                               int n_problems, const EpisodeConfig& base_cfg,
                               std::uint64_t seed_base = kHeldOutSeedBase) {
  if (shapes.empty()) throw std::invalid_argument("sweep_shape: empty shape list");
  SweepReport sweep;
  sweep.variable = "source_shape";
  for (ShapeTag tag : shapes) {
    BenchmarkReport report;
    report.rows.resize(n_problems);
    parallel_for(static_cast<std::size_t>(n_problems), [&](std::size_t idx) {
      const int i = static_cast<int>(idx);
      BenchmarkRow& row = report.rows[idx];
      row.index = i;
      row.problem = held_out_problem(i, params, base_cfg.scene, seed_base);
      row.problem.viscosity = base_cfg.sim.viscosity;
      row.problem.source_shape = tag;
      Stopwatch watch;
      const EpisodeResult res = run_episode(row.problem, params, base_cfg);
      row.wall_ms = watch.elapsed_ms();
      row.failed = res.failed;
      row.diagnostic = res.diagnostic;
      if (res.failed) return;
      row.spill_fraction = res.spill_fraction;
      row.mean_in_target_rp = res.mean_in_target_rp;
      row.in_target = res.reward.in_target;
      row.spilled = res.reward.spilled;
      row.remaining = res.reward.remaining;
      if (!res.plan_times_ms.empty()) {
        row.plan_p50_ms = percentile(res.plan_times_ms, 50.0);
        row.plan_p90_ms = percentile(res.plan_times_ms, 90.0);
        row.plan_p99_ms = percentile(res.plan_times_ms, 99.0);
        row.plan_max_ms = percentile(res.plan_times_ms, 100.0);
      }
    });
    report.recompute_aggregates();
    sweep.rows.push_back(SweepRow{shape_name(tag), std::move(report)});
  }
  return sweep;
}

inline void write_sweep_csv(std::ostream& out, const SweepReport& s) {
  out.precision(17);
  out << s.variable << ",problems,failed,mean_spill_fraction,mean_in_target_rp\n";
  for (const SweepRow& row : s.rows)
    out << row.condition << "," << row.report.rows.size() << "," << row.report.failed_count
        << "," << row.report.mean_spill_fraction << "," << row.report.mean_in_target_rp
        << "\n";
}

inline void write_sweep_csv(const std::string& path, const SweepReport& s) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write report: " + path);
  write_sweep_csv(out, s);
  if (!out) throw FileFormatError("write failed: " + path);
}

}  // namespace pourplan
