#pragma once

// Feed-forward network: standardized input, four ReLU hidden layers of 32
// units, a linear head for the outflow curve (p_x, p_y, v_x, v_y, rho;
// trained in standardized label space, destandardized on output) and a
// sigmoid head for the next-interval trajectory ratios (alpha, beta, gamma).
// Gradients are hand-written reverse accumulation; training is minibatch
// gradient descent with momentum. Everything is deterministic given seeds.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pourplan/dataset.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/features.hpp"
#include "pourplan/rng.hpp"

namespace pourplan {

inline constexpr int kHiddenWidth = 32;
inline constexpr int kHiddenLayers = 4;
inline constexpr int kCurveOutputs = 5;
inline constexpr int kPriorOutputs = 3;

struct MlpParams {
  ModelInputKind kind = ModelInputKind::Heightfield;
  VelocityMode trained_variant = VelocityMode::Follow;  // provenance, set by the trainer
  Eigen::VectorXd in_mean, in_std;
  Eigen::VectorXd curve_mean, curve_std;
  std::array<Eigen::MatrixXd, kHiddenLayers> w;
  std::array<Eigen::VectorXd, kHiddenLayers> b;
  Eigen::MatrixXd wa;
  Eigen::VectorXd ba;
  Eigen::MatrixXd wb;
  Eigen::VectorXd bb;

  int input_dim() const { return static_cast<int>(w[0].cols()); }
};

inline MlpParams init_params(ModelInputKind kind, std::uint64_t seed) {
  MlpParams p;
  p.kind = kind;
  const int in = model_input_dim(kind);
  p.in_mean = Eigen::VectorXd::Zero(in);
  p.in_std = Eigen::VectorXd::Ones(in);
  p.curve_mean = Eigen::VectorXd::Zero(kCurveOutputs);
  p.curve_std = Eigen::VectorXd::Ones(kCurveOutputs);
  std::mt19937_64 eng(seed);
  auto fill = [&](Eigen::MatrixXd& m, int rows, int cols) {
    m.resize(rows, cols);
    const double limit = std::sqrt(6.0 / cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = (2.0 * uniform01(eng) - 1.0) * limit;
  };
  for (int l = 0; l < kHiddenLayers; ++l) {
    fill(p.w[l], kHiddenWidth, l == 0 ? in : kHiddenWidth);
    p.b[l] = Eigen::VectorXd::Zero(kHiddenWidth);
  }
  fill(p.wa, kCurveOutputs, kHiddenWidth);
  p.ba = Eigen::VectorXd::Zero(kCurveOutputs);
  fill(p.wb, kPriorOutputs, kHiddenWidth);
  p.bb = Eigen::VectorXd::Zero(kPriorOutputs);
  return p;
}

struct MlpOutput {
  Eigen::VectorXd curve;  // destandardized: p_x, p_y, v_x, v_y, rho
  Eigen::VectorXd prior;  // (alpha, beta, gamma) in (0,1)
};

inline MlpOutput forward(const MlpParams& p, const Eigen::VectorXd& input) {
  if (input.size() != p.input_dim())
    throw ShapeMismatch("forward: input width " + std::to_string(input.size()) +
                        " does not match params width " + std::to_string(p.input_dim()));
  Eigen::VectorXd h = (input - p.in_mean).cwiseQuotient(p.in_std);
  for (int l = 0; l < kHiddenLayers; ++l) h = ((p.w[l] * h + p.b[l]).cwiseMax(0.0)).eval();
  MlpOutput out;
  out.curve = (p.wa * h + p.ba).cwiseProduct(p.curve_std) + p.curve_mean;
  const Eigen::VectorXd zb = p.wb * h + p.bb;
  out.prior = (1.0 + (-zb.array()).exp()).inverse().matrix();
  return out;
}

struct MlpGrads {
  std::array<Eigen::MatrixXd, kHiddenLayers> w;
  std::array<Eigen::VectorXd, kHiddenLayers> b;
  Eigen::MatrixXd wa;
  Eigen::VectorXd ba;
  Eigen::MatrixXd wb;
  Eigen::VectorXd bb;
};

inline MlpGrads zero_grads(const MlpParams& p) {
  MlpGrads g;
  for (int l = 0; l < kHiddenLayers; ++l) {
    g.w[l] = Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols());
    g.b[l] = Eigen::VectorXd::Zero(p.b[l].size());
  }
  g.wa = Eigen::MatrixXd::Zero(p.wa.rows(), p.wa.cols());
  g.ba = Eigen::VectorXd::Zero(p.ba.size());
  g.wb = Eigen::MatrixXd::Zero(p.wb.rows(), p.wb.cols());
  g.bb = Eigen::VectorXd::Zero(p.bb.size());
  return g;
}

// Batch loss: w_curve * MSE(curve head, standardized curve labels) +
// w_prior * MSE(sigmoid head, clamped prior labels); mean over batch x dims.
// Columns of the matrices are samples.
inline double loss_and_grad(const MlpParams& p, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& curve_labels,
                            const Eigen::MatrixXd& prior_labels, double w_curve,
                            double w_prior, MlpGrads* grads) {
  const int bsz = static_cast<int>(inputs.cols());
  if (bsz == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (inputs.rows() != p.input_dim() || curve_labels.rows() != kCurveOutputs ||
      prior_labels.rows() != kPriorOutputs || curve_labels.cols() != bsz ||
      prior_labels.cols() != bsz)
    throw ShapeMismatch("loss_and_grad: batch dimensions do not match params");

  const Eigen::MatrixXd z =
      (inputs.colwise() - p.in_mean).array().colwise() / p.in_std.array();
  std::array<Eigen::MatrixXd, kHiddenLayers> act;  // post-ReLU activations
  Eigen::MatrixXd h = z;
  for (int l = 0; l < kHiddenLayers; ++l) {
    h = (((p.w[l] * h).colwise() + p.b[l]).cwiseMax(0.0)).eval();
    act[l] = h;
  }
  const Eigen::MatrixXd a = (p.wa * h).colwise() + p.ba;
  const Eigen::MatrixXd yc = (curve_labels.colwise() - p.curve_mean).array().colwise() /
                             p.curve_std.array();
  const Eigen::MatrixXd zb = (p.wb * h).colwise() + p.bb;
  const Eigen::MatrixXd pr = (1.0 + (-zb.array()).exp()).inverse().matrix();
  const Eigen::MatrixXd yp = prior_labels.array().min(1.0 - 1e-4).max(1e-4).matrix();

  const Eigen::MatrixXd da_raw = a - yc;
  const Eigen::MatrixXd dp_raw = pr - yp;
  const double loss = w_curve * da_raw.squaredNorm() / (kCurveOutputs * bsz) +
                      w_prior * dp_raw.squaredNorm() / (kPriorOutputs * bsz);
  if (!grads) return loss;

  const Eigen::MatrixXd da = da_raw * (2.0 * w_curve / (kCurveOutputs * bsz));
  const Eigen::MatrixXd dzb =
      (dp_raw.array() * pr.array() * (1.0 - pr.array())).matrix() *
      (2.0 * w_prior / (kPriorOutputs * bsz));

  grads->wa = da * act[kHiddenLayers - 1].transpose();
  grads->ba = da.rowwise().sum();
  grads->wb = dzb * act[kHiddenLayers - 1].transpose();
  grads->bb = dzb.rowwise().sum();

  Eigen::MatrixXd dh = p.wa.transpose() * da + p.wb.transpose() * dzb;
  for (int l = kHiddenLayers - 1; l >= 0; --l) {
    const Eigen::MatrixXd dpre =
        (dh.array() * (act[l].array() > 0.0).cast<double>()).matrix();
    const Eigen::MatrixXd& below = l == 0 ? z : act[l - 1];
    grads->w[l] = dpre * below.transpose();
    grads->b[l] = dpre.rowwise().sum();
    if (l > 0) dh = p.w[l].transpose() * dpre;
  }
  return loss;
}

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 200;
  double w_curve = 1.0;
  double w_prior = 1.0;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct TrainOutput {
  MlpParams params;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch (empty if no validation split)
};

inline TrainOutput train(const std::vector<PourSample>& samples, ModelInputKind kind,
                         const TrainConfig& cfg) {
  if (samples.empty()) throw std::invalid_argument("train: empty dataset");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction <= 0.5))
    throw std::invalid_argument("train: val_fraction must be in [0, 0.5]");
  const int in_dim = model_input_dim(kind);
  const int n = static_cast<int>(samples.size());

  Eigen::MatrixXd x(in_dim, n), yc(kCurveOutputs, n), yp(kPriorOutputs, n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> v = samples[i].model_input(kind);
    x.col(i) = Eigen::Map<const Eigen::VectorXd>(v.data(), in_dim);
    const std::array<double, 5> c = samples[i].curve_label();
    yc.col(i) = Eigen::Map<const Eigen::VectorXd>(c.data(), kCurveOutputs);
    yp.col(i) = Eigen::Vector3d(samples[i].label_prior[0], samples[i].label_prior[1],
                                samples[i].label_prior[2]);
  }

  std::mt19937_64 eng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<int>(uniform01(eng) * (i + 1))]);
  const int n_val = std::min(n - 1, static_cast<int>(std::ceil(cfg.val_fraction * n)));
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());
  const int n_train = static_cast<int>(train_idx.size());

  TrainOutput out;
  out.params = init_params(kind, mix_seed(cfg.seed, 1));
  MlpParams& p = out.params;
  for (int d = 0; d < in_dim; ++d) {
    double mean = 0.0;
    for (int i : train_idx) mean += x(d, i);
    mean /= n_train;
    double var = 0.0;
    for (int i : train_idx) var += (x(d, i) - mean) * (x(d, i) - mean);
    p.in_mean[d] = mean;
    p.in_std[d] = std::max(1e-6, std::sqrt(var / n_train));
  }
  for (int d = 0; d < kCurveOutputs; ++d) {
    double mean = 0.0;
    for (int i : train_idx) mean += yc(d, i);
    mean /= n_train;
    double var = 0.0;
    for (int i : train_idx) var += (yc(d, i) - mean) * (yc(d, i) - mean);
    p.curve_mean[d] = mean;
    p.curve_std[d] = std::max(1e-6, std::sqrt(var / n_train));
  }

  MlpGrads vel = zero_grads(p), g = zero_grads(p);
  auto gather = [&](const std::vector<int>& idx, int lo, int hi, Eigen::MatrixXd& bx,
                    Eigen::MatrixXd& bc, Eigen::MatrixXd& bp) {
    bx.resize(in_dim, hi - lo);
    bc.resize(kCurveOutputs, hi - lo);
    bp.resize(kPriorOutputs, hi - lo);
    for (int i = lo; i < hi; ++i) {
      bx.col(i - lo) = x.col(idx[i]);
      bc.col(i - lo) = yc.col(idx[i]);
      bp.col(i - lo) = yp.col(idx[i]);
    }
  };

  Eigen::MatrixXd bx, bc, bp;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n_train - 1; i > 0; --i)
      std::swap(train_idx[i], train_idx[static_cast<int>(uniform01(eng) * (i + 1))]);
    double epoch_loss = 0.0;
    int batches = 0;
    for (int lo = 0; lo < n_train; lo += cfg.batch_size) {
      const int hi = std::min(n_train, lo + cfg.batch_size);
      gather(train_idx, lo, hi, bx, bc, bp);
      epoch_loss += loss_and_grad(p, bx, bc, bp, cfg.w_curve, cfg.w_prior, &g);
      ++batches;
      auto update = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& v, const Eigen::MatrixXd& gr) {
        v = cfg.momentum * v - cfg.learning_rate * gr;
        w += v;
      };
      auto update_v = [&](Eigen::VectorXd& w, Eigen::VectorXd& v, const Eigen::VectorXd& gr) {
        v = cfg.momentum * v - cfg.learning_rate * gr;
        w += v;
      };
      for (int l = 0; l < kHiddenLayers; ++l) {
        update(p.w[l], vel.w[l], g.w[l]);
        update_v(p.b[l], vel.b[l], g.b[l]);
      }
      update(p.wa, vel.wa, g.wa);
      update_v(p.ba, vel.ba, g.ba);
      update(p.wb, vel.wb, g.wb);
      update_v(p.bb, vel.bb, g.bb);
    }
    out.train_loss.push_back(epoch_loss / std::max(1, batches));
    if (!val_idx.empty()) {
      gather(val_idx, 0, n_val, bx, bc, bp);
      out.val_loss.push_back(loss_and_grad(p, bx, bc, bp, cfg.w_curve, cfg.w_prior, nullptr));
    }
  }
  return out;
}

// Relative prediction errors bucketed by source turning angle (10 degree
// bins). Curve errors are measured only on samples whose label has positive
// outflow: with no stream there is nothing for the curve to predict and the
// label velocity is a sentinel.
struct AccuracyBucket {
  int curve_count = 0;
  int prior_count = 0;
  double curve_err = 0.0;  // mean within bucket
  double prior_err = 0.0;
};

struct AccuracyReport {
  std::vector<AccuracyBucket> buckets;
  double mean_curve_err = 0.0;
  double mean_prior_err = 0.0;
  int curve_samples = 0;
  int prior_samples = 0;
};

inline AccuracyReport evaluate_accuracy(const MlpParams& p,
                                        const std::vector<PourSample>& samples,
                                        double theta_max) {
  const double bucket_rad = 10.0 * kPi / 180.0;
  const int nbuckets = std::max(1, static_cast<int>(std::ceil(theta_max / bucket_rad)));
  AccuracyReport rep;
  rep.buckets.resize(nbuckets);
  std::vector<double> curve_sum(nbuckets, 0.0), prior_sum(nbuckets, 0.0);
  double curve_total = 0.0, prior_total = 0.0;
  for (const PourSample& s : samples) {
    const std::vector<double> in = s.model_input(p.kind);
    const MlpOutput out = forward(p, Eigen::Map<const Eigen::VectorXd>(
                                         in.data(), static_cast<Eigen::Index>(in.size())));
    const int bkt = std::clamp(static_cast<int>(s.source_pose.theta / bucket_rad), 0,
                               nbuckets - 1);
    const Eigen::Vector3d yp(s.label_prior[0], s.label_prior[1], s.label_prior[2]);
    const double pe = (out.prior - yp).norm() / (yp.norm() + 1e-6);
    prior_sum[bkt] += pe;
    prior_total += pe;
    ++rep.buckets[bkt].prior_count;
    ++rep.prior_samples;
    if (s.label_curve.rho > 0.0) {
      const std::array<double, 5> c = s.curve_label();
      const Eigen::VectorXd ycv = Eigen::Map<const Eigen::VectorXd>(c.data(), kCurveOutputs);
      const double ce = (out.curve - ycv).norm() / (ycv.norm() + 1e-6);
      curve_sum[bkt] += ce;
      curve_total += ce;
      ++rep.buckets[bkt].curve_count;
      ++rep.curve_samples;
    }
  }
  for (int b = 0; b < nbuckets; ++b) {
    if (rep.buckets[b].curve_count > 0)
      rep.buckets[b].curve_err = curve_sum[b] / rep.buckets[b].curve_count;
    if (rep.buckets[b].prior_count > 0)
      rep.buckets[b].prior_err = prior_sum[b] / rep.buckets[b].prior_count;
  }
  if (rep.curve_samples > 0) rep.mean_curve_err = curve_total / rep.curve_samples;
  if (rep.prior_samples > 0) rep.mean_prior_err = prior_total / rep.prior_samples;
  return rep;
}

// ---------------------------------------------------------------------------
// Params file: text header, then a raw block of little-endian 64-bit floats.

inline void write_params(const std::string& path, const MlpParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileFormatError("cannot write params: " + path);
  std::vector<double> flat;
  auto push_m = [&](const Eigen::MatrixXd& m) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  };
  auto push_v = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) flat.push_back(v[i]);
  };
  push_v(p.in_mean);
  push_v(p.in_std);
  push_v(p.curve_mean);
  push_v(p.curve_std);
  for (int l = 0; l < kHiddenLayers; ++l) {
    push_m(p.w[l]);
    push_v(p.b[l]);
  }
  push_m(p.wa);
  push_v(p.ba);
  push_m(p.wb);
  push_v(p.bb);
  out << "pourplan-mlp 1\n"
      << "kind " << model_input_name(p.kind) << "\n"
      << "variant " << velocity_mode_name(p.trained_variant) << "\n"
      << "input " << p.input_dim() << "\n"
      << "hidden " << kHiddenLayers << " " << kHiddenWidth << "\n"
      << "outputs " << kCurveOutputs << " " << kPriorOutputs << "\n"
      << "doubles " << flat.size() << "\n";
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw FileFormatError("write failed: " + path);
}

inline MlpParams read_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError("cannot open params: " + path);
  std::string word;
  auto expect = [&](const std::string& want) {
    if (!(in >> word) || word != want)
      throw FileFormatError(path + ": expected '" + want + "' in header");
  };
  expect("pourplan-mlp");
  int version;
  if (!(in >> version) || version != 1) throw FileFormatError(path + ": unsupported version");
  expect("kind");
  std::string kind_name;
  in >> kind_name;
  ModelInputKind kind;
  if (kind_name == "heightfield") kind = ModelInputKind::Heightfield;
  else if (kind_name == "lip") kind = ModelInputKind::Lip;
  else throw FileFormatError(path + ": unknown feature kind '" + kind_name + "'");
  expect("variant");
  std::string variant_name;
  in >> variant_name;
  const VelocityMode variant = parse_velocity_mode(variant_name);
  expect("input");
  int in_dim;
  in >> in_dim;
  expect("hidden");
  int layers, width;
  in >> layers >> width;
  expect("outputs");
  int nc, np;
  in >> nc >> np;
  if (layers != kHiddenLayers || width != kHiddenWidth || nc != kCurveOutputs ||
      np != kPriorOutputs || in_dim != model_input_dim(kind))
    throw FileFormatError(path + ": architecture mismatch");
  expect("doubles");
  std::size_t count;
  in >> count;
  in.ignore(2, '\n');
  std::vector<double> flat(count);
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw FileFormatError(path + ": truncated parameter block");

  MlpParams p = init_params(kind, 0);
  p.trained_variant = variant;
  std::size_t k = 0;
  auto pop_v = [&](Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) v[i] = flat.at(k++);
  };
  auto pop_m = [&](Eigen::MatrixXd& m) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = flat.at(k++);
  };
  pop_v(p.in_mean);
  pop_v(p.in_std);
  pop_v(p.curve_mean);
  pop_v(p.curve_std);
  for (int l = 0; l < kHiddenLayers; ++l) {
    pop_m(p.w[l]);
    pop_v(p.b[l]);
  }
  pop_m(p.wa);
  pop_v(p.ba);
  pop_m(p.wb);
  pop_v(p.bb);
  if (k != flat.size()) throw FileFormatError(path + ": parameter count mismatch");
  return p;
}

}  // namespace pourplan
