#pragma once

// Limited-memory BFGS with Armijo backtracking. The caller provides a fused
// value-and-gradient callable. The result is never worse than the starting
// point: the best accepted iterate is returned even when the search stalls
// or hits non-finite values (then flagged failed).

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <limits>

namespace pourplan {

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 50;
  double gradient_tolerance = 1e-6;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool failed = false;
};

template <typename F>
LbfgsResult lbfgs_minimize(F&& value_and_grad, Eigen::VectorXd x0, const LbfgsOptions& opt) {
  LbfgsResult res;
  const int n = static_cast<int>(x0.size());
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(n), g_new(n);
  double f = value_and_grad(x, g);
  if (!std::isfinite(f) || !g.allFinite()) {
    res.x = x;
    res.value = f;
    res.failed = true;
    return res;
  }
  res.x = x;
  res.value = f;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd q(n), dir(n);

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // Two-loop recursion for the quasi-Newton direction.
    q = g;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    dir = -q;
    double dg = dir.dot(g);
    if (!(dg < 0.0)) {  // not a descent direction: restart with steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      dg = -g.squaredNorm();
    }

    double step = (it == 0 && s_hist.empty()) ? 1.0 / std::max(1.0, g.norm()) : 1.0;
    double f_new = f;
    Eigen::VectorXd x_new = x;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * dir;
      f_new = value_and_grad(x_new, g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= f + 1e-4 * step * dg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++res.iterations;
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    f = f_new;
    g = g_new;
    if (f < res.value) {
      res.value = f;
      res.x = x;
    }
  }
  if (g.allFinite() && g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance)
    res.converged = true;
  return res;
}

}  // namespace pourplan
