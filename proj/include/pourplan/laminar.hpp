#pragma once

// Vorticity diagnostic. Particle velocities are splatted onto a staggered
// grid over the liquid's bounding box; a scalar potential whose gradient best
// matches the grid field is found by least squares, and the metric is the
// relative residual |v - grad(psi)| / |v|. Curl-free fields (uniform
// translation, gradients of quadratics) score ~0, rotational fields score
// high. Faces with thin particle support or a missing adjacent occupied cell
// are excluded so partially covered grid edges do not pollute the residual.

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pourplan/errors.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/sim.hpp"

namespace pourplan {

// Default grid resolution for the diagnostic: a few particle spacings, so
// faces average several particles and single-particle noise cancels.
inline constexpr double kLaminarResolution = 0.03;

// The metric only means something while liquid is actually streaming. Both
// dataset generation and evaluation gate on this same predicate: at least 10
// particles moving faster than a resting-jitter bound.
inline bool laminar_gate_applies(const LiquidState& state, double min_speed = 0.05,
                                 int min_count = 10) {
  int moving = 0;
  for (const Particle& p : state.particles)
    if (norm_sq(p.velocity) > min_speed * min_speed && ++moving >= min_count) return true;
  return false;
}

inline double laminar_metric(const LiquidState& state, double resolution) {
  if (resolution <= 0.0) throw std::invalid_argument("laminar_metric: resolution must be positive");
  const std::size_t n = state.particles.size();
  std::size_t moving = 0;
  for (const Particle& p : state.particles)
    if (p.velocity.x != 0.0 || p.velocity.y != 0.0) ++moving;
  if (moving < 10)
    throw UndefinedMetric("laminar_metric: fewer than 10 particles with nonzero speed");

  Vec2 lo = state.particles[0].position, hi = lo;
  for (const Particle& p : state.particles) {
    lo.x = std::min(lo.x, p.position.x);
    lo.y = std::min(lo.y, p.position.y);
    hi.x = std::max(hi.x, p.position.x);
    hi.y = std::max(hi.y, p.position.y);
  }
  const double h = resolution;
  const Vec2 origin = lo - Vec2{h, h};
  const int nx = static_cast<int>(std::ceil((hi.x - origin.x) / h)) + 2;
  const int ny = static_cast<int>(std::ceil((hi.y - origin.y) / h)) + 2;

  // u faces: (nx+1) x ny at (i*h, (j+0.5)*h); v faces: nx x (ny+1).
  const int nu = (nx + 1) * ny;
  const int nv = nx * (ny + 1);
  std::vector<double> usum(nu, 0.0), uw(nu, 0.0), vsum(nv, 0.0), vw(nv, 0.0);
  std::vector<char> occupied(static_cast<std::size_t>(nx) * ny, 0);

  auto splat = [&](double gx, double gy, double value, std::vector<double>& sum,
                   std::vector<double>& wgt, int sx, int sy) {
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    const double fx = gx - i0, fy = gy - j0;
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int di[4] = {0, 1, 0, 1}, dj[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k) {
      const int i = i0 + di[k], j = j0 + dj[k];
      if (i < 0 || i >= sx || j < 0 || j >= sy) continue;
      sum[static_cast<std::size_t>(j) * sx + i] += w[k] * value;
      wgt[static_cast<std::size_t>(j) * sx + i] += w[k];
    }
  };

  for (std::size_t p = 0; p < n; ++p) {
    const Vec2 r = state.particles[p].position - origin;
    splat(r.x / h, r.y / h - 0.5, state.particles[p].velocity.x, usum, uw, nx + 1, ny);
    splat(r.x / h - 0.5, r.y / h, state.particles[p].velocity.y, vsum, vw, nx, ny + 1);
    const int ci = static_cast<int>(std::floor(r.x / h));
    const int cj = static_cast<int>(std::floor(r.y / h));
    if (ci >= 0 && ci < nx && cj >= 0 && cj < ny)
      occupied[static_cast<std::size_t>(cj) * nx + ci] = 1;
  }

  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(nu) + nv);
  for (double w : uw)
    if (w > 0.0) weights.push_back(w);
  for (double w : vw)
    if (w > 0.0) weights.push_back(w);
  if (weights.empty()) throw UndefinedMetric("laminar_metric: no grid support");
  std::nth_element(weights.begin(), weights.begin() + weights.size() / 2, weights.end());
  const double cutoff = 0.8 * weights[weights.size() / 2];

  // Equations: one per kept face, relating the two adjacent cell potentials.
  struct FaceEq {
    int cell_lo, cell_hi;  // potential indices
    double value;          // face velocity component
  };
  std::vector<int> cell_index(static_cast<std::size_t>(nx) * ny, -1);
  int ncells = 0;
  for (std::size_t c = 0; c < occupied.size(); ++c)
    if (occupied[c]) cell_index[c] = ncells++;

  std::vector<FaceEq> eqs;
  auto cell_at = [&](int i, int j) -> int {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return -1;
    return cell_index[static_cast<std::size_t>(j) * nx + i];
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const std::size_t f = static_cast<std::size_t>(j) * (nx + 1) + i;
      if (uw[f] < cutoff) continue;
      const int cl = cell_at(i - 1, j), cr = cell_at(i, j);
      if (cl < 0 || cr < 0) continue;
      eqs.push_back({cl, cr, usum[f] / uw[f]});
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t f = static_cast<std::size_t>(j) * nx + i;
      if (vw[f] < cutoff) continue;
      const int cl = cell_at(i, j - 1), cr = cell_at(i, j);
      if (cl < 0 || cr < 0) continue;
      eqs.push_back({cl, cr, vsum[f] / vw[f]});
    }

  double vnorm_sq = 0.0;
  for (const FaceEq& e : eqs) vnorm_sq += e.value * e.value;
  if (eqs.size() < 4 || ncells < 2)
    throw UndefinedMetric("laminar_metric: insufficient grid coverage");
  if (vnorm_sq <= 0.0)
    throw UndefinedMetric("laminar_metric: all-zero velocity field");

  // Normal equations for min |grad(psi) - v|^2 with a tiny ridge term that
  // fixes the per-component constant gauge.
  const double inv_h = 1.0 / h;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(eqs.size() * 4 + ncells);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ncells);
  for (const FaceEq& e : eqs) {
    trips.emplace_back(e.cell_lo, e.cell_lo, inv_h * inv_h);
    trips.emplace_back(e.cell_hi, e.cell_hi, inv_h * inv_h);
    trips.emplace_back(e.cell_lo, e.cell_hi, -inv_h * inv_h);
    trips.emplace_back(e.cell_hi, e.cell_lo, -inv_h * inv_h);
    rhs[e.cell_hi] += e.value * inv_h;
    rhs[e.cell_lo] -= e.value * inv_h;
  }
  const double ridge = 1e-10 * inv_h * inv_h;
  for (int c = 0; c < ncells; ++c) trips.emplace_back(c, c, ridge);

  Eigen::SparseMatrix<double> m(ncells, ncells);
  m.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(m);
  if (solver.info() != Eigen::Success)
    throw UndefinedMetric("laminar_metric: potential solve failed");
  const Eigen::VectorXd psi = solver.solve(rhs);

  double res_sq = 0.0;
  for (const FaceEq& e : eqs) {
    const double d = (psi[e.cell_hi] - psi[e.cell_lo]) * inv_h - e.value;
    res_sq += d * d;
  }
  return std::sqrt(res_sq / vnorm_sq);
}

}  // namespace pourplan
