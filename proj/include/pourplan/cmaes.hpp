#pragma once

// Covariance matrix adaptation evolution strategy ((mu/mu_w, lambda) flavor
// with rank-one and rank-mu covariance updates and cumulative step-size
// control). Box constraints on an open-below interval are enforced by
// resampling, falling back to a clamp after too many rejections. Candidates
// with non-finite fitness inherit the worst finite fitness of their
// generation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "pourplan/rng.hpp"

namespace pourplan {

struct CmaOptions {
  int iterations = 100;
  int population = 16;
  std::uint64_t seed = 0;
  double sigma0 = 0.3;
  std::vector<double> mean0;  // empty: midpoint of the box
  double bound_lo = 0.0;      // exclusive
  double bound_hi = 1.0;      // inclusive
};

struct CmaState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double sigma = 0.0;
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;
  long generation = 0;
};

struct CmaResult {
  std::vector<double> best_point;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> history;  // best-so-far per generation, non-increasing
  long evaluations = 0;
};

class CmaEs {
 public:
  CmaEs(int dim, const CmaOptions& opt) : n_(dim), opt_(opt), gauss_(opt.seed) {
    if (dim < 1) throw std::invalid_argument("CmaEs: dimension must be >= 1");
    if (opt.population < 1 || opt.iterations < 1)
      throw std::invalid_argument("CmaEs: population and iterations must be >= 1");
    if (!(opt.bound_lo < opt.bound_hi)) throw std::invalid_argument("CmaEs: empty bounds");
    lambda_ = opt.population;
    mu_ = std::max(1, lambda_ / 2);
    weights_.resize(mu_);
    for (int i = 0; i < mu_; ++i)
      weights_[i] = std::log((lambda_ + 1) / 2.0) - std::log(i + 1.0);
    const double wsum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    double w2 = 0.0;
    for (double& w : weights_) {
      w = std::max(w, 1e-12) / wsum;
      w2 += w * w;
    }
    mu_eff_ = 1.0 / w2;

    const double n = n_;
    c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
    d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) + c_sigma_;
    c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
    c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
    c_mu_ = std::min(1.0 - c_1_,
                     2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
    chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    state_.mean = Eigen::VectorXd::Constant(n_, 0.5 * (opt.bound_lo + opt.bound_hi));
    if (!opt.mean0.empty()) {
      if (static_cast<int>(opt.mean0.size()) != n_)
        throw std::invalid_argument("CmaEs: mean0 dimension mismatch");
      state_.mean = Eigen::Map<const Eigen::VectorXd>(opt.mean0.data(), n_);
    }
    state_.covariance = Eigen::MatrixXd::Identity(n_, n_);
    state_.sigma = opt.sigma0;
    state_.p_sigma = Eigen::VectorXd::Zero(n_);
    state_.p_c = Eigen::VectorXd::Zero(n_);
  }

  const CmaState& state() const { return state_; }

  // One generation: sample, evaluate, update. Returns the generation's best
  // candidate value (after the non-finite substitution).
  template <typename F>
  double step(F&& objective, std::vector<double>* best_point, double* best_value,
              long* evaluations) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state_.covariance);
    Eigen::VectorXd d = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
    const Eigen::MatrixXd& b = eig.eigenvectors();

    std::vector<Eigen::VectorXd> xs(lambda_);
    std::vector<double> fs(lambda_);
    for (int k = 0; k < lambda_; ++k) {
      Eigen::VectorXd x;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        Eigen::VectorXd z(n_);
        for (int i = 0; i < n_; ++i) z[i] = gauss_();
        x = state_.mean + state_.sigma * (b * d.asDiagonal() * z);
        ok = in_bounds(x);
      }
      if (!ok)
        for (int i = 0; i < n_; ++i)
          x[i] = std::clamp(x[i], opt_.bound_lo + 1e-9 * (opt_.bound_hi - opt_.bound_lo),
                            opt_.bound_hi);
      xs[k] = x;
      fs[k] = objective(std::vector<double>(x.data(), x.data() + n_));
      if (evaluations) ++*evaluations;
    }

    double worst = -std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (double f : fs)
      if (std::isfinite(f)) {
        worst = std::max(worst, f);
        any_finite = true;
      }
    for (double& f : fs)
      if (!std::isfinite(f)) f = any_finite ? worst : 0.0;

    std::vector<int> order(lambda_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return fs[a] < fs[c]; });

    if (best_value && fs[order[0]] < *best_value) {
      *best_value = fs[order[0]];
      if (best_point)
        best_point->assign(xs[order[0]].data(), xs[order[0]].data() + n_);
    }

    const Eigen::VectorXd old_mean = state_.mean;
    Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < mu_; ++i) new_mean += weights_[i] * xs[order[i]];

    const Eigen::VectorXd delta = (new_mean - old_mean) / state_.sigma;
    const Eigen::MatrixXd c_inv_sqrt = b * d.cwiseInverse().asDiagonal() * b.transpose();
    state_.p_sigma = (1.0 - c_sigma_) * state_.p_sigma +
                     std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * (c_inv_sqrt * delta);
    const double ps_norm = state_.p_sigma.norm();
    const double denom =
        std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * (state_.generation + 1)));
    const bool h_sigma = ps_norm / denom < (1.4 + 2.0 / (n_ + 1.0)) * chi_n_;
    state_.p_c = (1.0 - c_c_) * state_.p_c +
                 (h_sigma ? std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) : 0.0) * delta;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < mu_; ++i) {
      const Eigen::VectorXd y = (xs[order[i]] - old_mean) / state_.sigma;
      rank_mu += weights_[i] * (y * y.transpose());
    }
    const double hs_corr = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
    state_.covariance = (1.0 - c_1_ - c_mu_) * state_.covariance +
                        c_1_ * (state_.p_c * state_.p_c.transpose() + hs_corr * state_.covariance) +
                        c_mu_ * rank_mu;
    state_.covariance = 0.5 * (state_.covariance + state_.covariance.transpose().eval());
    state_.sigma *= std::exp(c_sigma_ / d_sigma_ * (ps_norm / chi_n_ - 1.0));
    state_.mean = new_mean;
    ++state_.generation;
    return fs[order[0]];
  }

 private:
  bool in_bounds(const Eigen::VectorXd& x) const {
    for (int i = 0; i < n_; ++i)
      if (!(x[i] > opt_.bound_lo && x[i] <= opt_.bound_hi)) return false;
    return true;
  }

  int n_, lambda_ = 0, mu_ = 0;
  CmaOptions opt_;
  GaussianDraw gauss_;
  std::vector<double> weights_;
  double mu_eff_ = 0.0, c_sigma_ = 0.0, d_sigma_ = 0.0, c_c_ = 0.0, c_1_ = 0.0, c_mu_ = 0.0,
         chi_n_ = 0.0;
  CmaState state_;
};

template <typename F>
CmaResult cmaes_minimize(F&& objective, int dim, const CmaOptions& opt) {
  CmaEs es(dim, opt);
  CmaResult r;
  r.history.reserve(opt.iterations);
  for (int g = 0; g < opt.iterations; ++g) {
    es.step(objective, &r.best_point, &r.best_value, &r.evaluations);
    r.history.push_back(r.best_value);
  }
  if (r.best_point.empty())
    r.best_point.assign(es.state().mean.data(), es.state().mean.data() + dim);
  return r;
}

}  // namespace pourplan
