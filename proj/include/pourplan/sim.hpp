#pragma once

// Particle liquid simulator. Pressure is handled as an iterative density
// error correction on predicted positions (position-based projection with a
// one-sided incompressibility constraint), which stays stable at the fixed
// internal time step. Viscosity is a pairwise Laplacian-form force, walls are
// sphere samplings that contribute boundary density with mirrored
// multipliers, and a swept projection keeps particles out of wall spheres at
// any approach speed.
//
// Guarantees relied on elsewhere:
//   - particle count and ordering never change;
//   - with zero gravity/viscosity and no boundaries a uniform velocity field
//     is preserved exactly and positions advect by exactly v*dt;
//   - stepping is bitwise deterministic for identical inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pourplan/container.hpp"
#include "pourplan/errors.hpp"
#include "pourplan/geometry.hpp"
#include "pourplan/problem.hpp"
#include "pourplan/rng.hpp"

namespace pourplan {

struct Particle {
  Vec2 position;
  Vec2 velocity;
};

struct LiquidState {
  std::vector<Particle> particles;
  double time = 0.0;
};

struct SimConfig {
  double dt = 0.005;               // internal step; callers sub-step multiples
  double viscosity = 0.001;        // dynamic viscosity mu
  double gravity = 9.8;            // magnitude, acting along -y
  double rest_density = 1000.0;
  double particle_spacing = 0.009;
  double kernel_radius = 0.0216;   // support radius, >= 2 * spacing
  double stiffness = 1.0e4;        // inverse relaxation of the density solve
  int pressure_iterations = 3;
  double velocity_smoothing = 0.0; // neighbor velocity blend in [0, 1)
  Aabb domain_bounds{{-25.0, -25.0}, {25.0, 25.0}};

  void validate() const {
    if (dt <= 0.0) throw std::invalid_argument("SimConfig: dt must be positive");
    if (particle_spacing <= 0.0) throw std::invalid_argument("SimConfig: spacing must be positive");
    if (kernel_radius < 2.0 * particle_spacing)
      throw std::invalid_argument("SimConfig: kernel_radius must be >= 2 * particle_spacing");
    if (rest_density <= 0.0) throw std::invalid_argument("SimConfig: rest_density must be positive");
    if (stiffness <= 0.0) throw std::invalid_argument("SimConfig: stiffness must be positive");
    if (pressure_iterations < 1)
      throw std::invalid_argument("SimConfig: pressure_iterations must be >= 1");
    if (!(domain_bounds.lo.x < domain_bounds.hi.x && domain_bounds.lo.y < domain_bounds.hi.y))
      throw std::invalid_argument("SimConfig: empty domain bounds");
  }
};

// Kinematic rigid container snapshot for one step.
struct RigidBodyState {
  const Container* container = nullptr;
  Pose2 pose;
  Vec2 velocity;
  double angular_rate = 0.0;

  Vec2 point_velocity(Vec2 world) const {
    const Vec2 r = world - pose.position();
    return velocity + Vec2{-angular_rate * r.y, angular_rate * r.x};
  }
};

namespace detail {

// 2D cubic spline kernel with support radius H.
struct CubicKernel {
  double H = 0.0, sigma = 0.0;

  void init(double support) {
    H = support;
    sigma = 40.0 / (7.0 * kPi * H * H);
  }
  double w(double r) const {
    const double q = r / H;
    if (q >= 1.0) return 0.0;
    if (q < 0.5) return sigma * (6.0 * q * q * (q - 1.0) + 1.0);
    const double u = 1.0 - q;
    return sigma * 2.0 * u * u * u;
  }
  // dW/dr; negative inside the support.
  double dw(double r) const {
    const double q = r / H;
    if (q >= 1.0) return 0.0;
    if (q < 0.5) return sigma / H * (18.0 * q * q - 12.0 * q);
    const double u = 1.0 - q;
    return sigma / H * (-6.0 * u * u);
  }
};

// Uniform hash grid over points, deterministic: entries are sorted by
// (cell key, insertion id); an index maps each occupied cell to its run so a
// cell scan is a single hash lookup.
class NeighborGrid {
 public:
  void begin(double cell_size) {
    cs_ = cell_size;
    entries_.clear();
    index_.clear();
  }
  void add(Vec2 p, int id) { entries_.push_back({key_of(p), id}); }
  void finish() {
    std::sort(entries_.begin(), entries_.end());
    index_.reserve(entries_.size());
    for (int i = 0; i < static_cast<int>(entries_.size());) {
      int j = i;
      while (j < static_cast<int>(entries_.size()) && entries_[j].key == entries_[i].key) ++j;
      index_.emplace(entries_[i].key, std::pair<int, int>{i, j});
      i = j;
    }
  }

  template <typename Fn>
  void for_each_near(Vec2 p, Fn&& fn) const {
    const long cx = cell_coord(p.x), cy = cell_coord(p.y);
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy) scan_cell(cx + dx, cy + dy, fn);
  }

  template <typename Fn>
  void for_each_in_box(Vec2 lo, Vec2 hi, Fn&& fn) const {
    const long x0 = cell_coord(lo.x), x1 = cell_coord(hi.x);
    const long y0 = cell_coord(lo.y), y1 = cell_coord(hi.y);
    for (long cx = x0; cx <= x1; ++cx)
      for (long cy = y0; cy <= y1; ++cy) scan_cell(cx, cy, fn);
  }

 private:
  struct Entry {
    std::uint64_t key;
    int id;
    bool operator<(const Entry& o) const {
      return key != o.key ? key < o.key : id < o.id;
    }
  };

  long cell_coord(double v) const { return static_cast<long>(std::floor(v / cs_)); }
  static std::uint64_t pack(long cx, long cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx + (1l << 20))) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(cy + (1l << 20)));
  }
  std::uint64_t key_of(Vec2 p) const { return pack(cell_coord(p.x), cell_coord(p.y)); }

  template <typename Fn>
  void scan_cell(long cx, long cy, Fn&& fn) const {
    const auto it = index_.find(pack(cx, cy));
    if (it == index_.end()) return;
    for (int i = it->second.first; i < it->second.second; ++i) fn(entries_[i].id);
  }

  double cs_ = 1.0;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::pair<int, int>> index_;
};

inline double distance_to_boundary(const std::vector<Vec2>& poly, Vec2 p) {
  double best = std::numeric_limits<double>::max();
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j], b = poly[i];
    const Vec2 ab = b - a;
    const double t = std::clamp(dot(p - a, ab) / std::max(norm_sq(ab), 1e-300), 0.0, 1.0);
    best = std::min(best, norm(p - (a + ab * t)));
  }
  return best;
}

}  // namespace detail

class FluidSim {
 public:
  explicit FluidSim(SimConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    kernel_.init(cfg_.kernel_radius);
    mass_ = cfg_.rest_density * cfg_.particle_spacing * cfg_.particle_spacing;
    // Reference density of the ideal rest lattice under this kernel; the
    // incompressibility constraint targets it (with a hair of slack) so a
    // fresh lattice starts feasible and free streams stay force free.
    double sum = kernel_.w(0.0);
    const int reach = static_cast<int>(std::ceil(cfg_.kernel_radius / cfg_.particle_spacing)) + 1;
    for (int i = -reach; i <= reach; ++i)
      for (int j = -reach; j <= reach; ++j) {
        if (i == 0 && j == 0) continue;
        sum += kernel_.w(cfg_.particle_spacing * std::sqrt(double(i * i + j * j)));
      }
    lattice_density_ = mass_ * sum;
    constraint_density_ = lattice_density_ * 1.002;
    contact_offset_ = 0.5 * cfg_.particle_spacing;
  }

  const SimConfig& config() const { return cfg_; }
  double lattice_density() const { return lattice_density_; }
  long steps_taken() const { return step_count_; }

  // Tiles the container interior with a jittered lattice up to fill_level of
  // the interior height. Throws DegenerateScene when nothing fits.
  static LiquidState init_liquid(const Container& c, Pose2 pose, double fill_level,
                                 VelocityMode mode, Vec2 source_velocity, double spacing) {
    const Aabb b = c.interior_bounds;
    const double fill_line = b.lo.y + fill_level * (b.hi.y - b.lo.y);
    const double margin = 0.5 * spacing;
    LiquidState state;
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (double y = b.lo.y + margin; y <= fill_line - 0.25 * spacing; y += spacing) {
      for (double x = b.lo.x + margin; x <= b.hi.x - 0.25 * spacing; x += spacing) {
        Vec2 p{x, y};
        if (!c.contains_local(p)) continue;
        if (detail::distance_to_boundary(c.interior_poly, p) < margin * 0.999) continue;
        h = splitmix64(h);
        const double jx = (static_cast<double>(h >> 32) / 4294967296.0 - 0.5) * 0.1 * spacing;
        const double jy = (static_cast<double>(h & 0xffffffffull) / 4294967296.0 - 0.5) * 0.1 * spacing;
        Particle q;
        q.position = pose.to_world(p + Vec2{jx, jy});
        q.velocity = (mode == VelocityMode::Follow) ? source_velocity : Vec2{0.0, 0.0};
        state.particles.push_back(q);
      }
    }
    if (state.particles.empty())
      throw DegenerateScene("init_liquid: fill level yields no particles");
    return state;
  }

  // Advances one internal step of cfg.dt. Bodies are optional; when present
  // they act as kinematic boundaries at the given pose and velocity.
  void step(LiquidState& state, const RigidBodyState* source, const RigidBodyState* target) {
    const int n = static_cast<int>(state.particles.size());
    const double dt = cfg_.dt;
    gather_boundary(source, target);

    pos_.resize(n);
    vel_.resize(n);
    for (int i = 0; i < n; ++i) {
      pos_[i] = state.particles[i].position;
      vel_[i] = state.particles[i].velocity;
    }

    // External forces on current positions. The gravity-only path keeps
    // velocity updates exact.
    if (cfg_.viscosity > 0.0 && (n > 1 || !bnd_pos_.empty())) apply_viscosity(n);
    if (cfg_.gravity != 0.0)
      for (int i = 0; i < n; ++i) vel_[i].y -= dt * cfg_.gravity;

    pred_.resize(n);
    for (int i = 0; i < n; ++i) pred_[i] = pos_[i] + vel_[i] * dt;

    build_lists(n);
    solve_density(n);
    project_walls(n);

    const double inv_dt = 1.0 / dt;
    for (int i = 0; i < n; ++i) {
      Vec2 p = pred_[i];
      const Vec2 clamped{std::clamp(p.x, cfg_.domain_bounds.lo.x, cfg_.domain_bounds.hi.x),
                         std::clamp(p.y, cfg_.domain_bounds.lo.y, cfg_.domain_bounds.hi.y)};
      p = clamped;
      const Vec2 shift = p - (pos_[i] + vel_[i] * dt);
      if (shift.x != 0.0 || shift.y != 0.0) vel_[i] += shift * inv_dt;
      pos_[i] = p;
    }

    if (cfg_.velocity_smoothing > 0.0) apply_xsph(n);

    for (int i = 0; i < n; ++i) {
      state.particles[i].position = pos_[i];
      state.particles[i].velocity = vel_[i];
    }
    state.time += dt;
    ++step_count_;

    for (int i = 0; i < n; ++i) {
      const Particle& q = state.particles[i];
      if (!std::isfinite(q.position.x) || !std::isfinite(q.position.y) ||
          !std::isfinite(q.velocity.x) || !std::isfinite(q.velocity.y))
        throw SimulationDiverged(step_count_);
    }
  }

  // SPH density of each particle, including boundary contributions.
  std::vector<double> densities(const LiquidState& state, const RigidBodyState* source,
                                const RigidBodyState* target) {
    const int n = static_cast<int>(state.particles.size());
    gather_boundary(source, target);
    pred_.resize(n);
    for (int i = 0; i < n; ++i) pred_[i] = state.particles[i].position;
    build_lists(n);
    std::vector<double> rho(n);
    for (int i = 0; i < n; ++i) {
      double r = mass_ * kernel_.w(0.0);
      for (int k = liq_off_[i]; k < liq_off_[i + 1]; ++k)
        r += mass_ * kernel_.w(norm(pred_[i] - pred_[liq_[k]]));
      for (int k = bnd_off_[i]; k < bnd_off_[i + 1]; ++k)
        r += bnd_psi_[bnd_[k]] * kernel_.w(norm(pred_[i] - bnd_pos_[bnd_[k]]));
      rho[i] = r;
    }
    return rho;
  }

 private:
  void gather_boundary(const RigidBodyState* source, const RigidBodyState* target) {
    bnd_pos_.clear();
    bnd_vel_.clear();
    bnd_psi_.clear();
    bnd_radius_.clear();
    for (const RigidBodyState* body : {source, target}) {
      if (!body || !body->container) continue;
      const std::vector<double>& vol = boundary_volumes(*body->container);
      const std::vector<Sphere>& loc = body->container->local_spheres;
      for (std::size_t b = 0; b < loc.size(); ++b) {
        const Vec2 w = body->pose.to_world(loc[b].center);
        bnd_pos_.push_back(w);
        bnd_vel_.push_back(body->point_velocity(w));
        bnd_psi_.push_back(cfg_.rest_density * vol[b]);
        bnd_radius_.push_back(loc[b].radius);
      }
    }
    bnd_grid_.begin(cfg_.kernel_radius);
    for (std::size_t b = 0; b < bnd_pos_.size(); ++b)
      bnd_grid_.add(bnd_pos_[b], static_cast<int>(b));
    bnd_grid_.finish();
    bnd_margin_ = contact_offset_ + max_bnd_radius_() + max_bnd_speed_() * cfg_.dt;
  }

  // Per-sample effective volumes of a container's wall sampling, computed in
  // the local frame once per container (rigid transforms preserve them).
  const std::vector<double>& boundary_volumes(const Container& c) {
    auto it = volume_cache_.find(&c);
    if (it != volume_cache_.end()) return it->second;
    std::vector<double> vol(c.local_spheres.size());
    for (std::size_t i = 0; i < c.local_spheres.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c.local_spheres.size(); ++j) {
        const double r = norm(c.local_spheres[i].center - c.local_spheres[j].center);
        if (r < cfg_.kernel_radius) sum += kernel_.w(r);
      }
      vol[i] = 1.0 / sum;
    }
    return volume_cache_.emplace(&c, std::move(vol)).first->second;
  }

  void apply_viscosity(int n) {
    grid_.begin(cfg_.kernel_radius);
    for (int i = 0; i < n; ++i) grid_.add(pos_[i], i);
    grid_.finish();

    acc_.assign(n, Vec2{0.0, 0.0});
    const double h2 = 0.01 * cfg_.kernel_radius * cfg_.kernel_radius;
    const double H2 = cfg_.kernel_radius * cfg_.kernel_radius;
    const double visc = 2.0 * cfg_.viscosity / (cfg_.rest_density * cfg_.rest_density);
    const double dt = cfg_.dt;
    for (int i = 0; i < n; ++i) {
      Vec2 a{0.0, 0.0};
      grid_.for_each_near(pos_[i], [&](int id) {
        if (id == i) return;
        const Vec2 rij = pos_[i] - pos_[id];
        const double r2 = norm_sq(rij);
        if (r2 >= H2 || r2 <= 0.0) return;
        const double r = std::sqrt(r2);
        const double lap = visc * mass_ * (r * kernel_.dw(r)) / (r2 + h2);
        a += (vel_[i] - vel_[id]) * lap;
      });
      bnd_grid_.for_each_near(pos_[i], [&](int b) {
        const Vec2 rij = pos_[i] - bnd_pos_[b];
        const double r2 = norm_sq(rij);
        if (r2 >= H2 || r2 <= 0.0) return;
        const double r = std::sqrt(r2);
        const double lap = visc * bnd_psi_[b] * (r * kernel_.dw(r)) / (r2 + h2);
        a += (vel_[i] - bnd_vel_[b]) * lap;
      });
      acc_[i] = a;
    }
    for (int i = 0; i < n; ++i) vel_[i] += acc_[i] * dt;
  }

  void build_lists(int n) {
    grid_.begin(cfg_.kernel_radius);
    for (int i = 0; i < n; ++i) grid_.add(pred_[i], i);
    grid_.finish();

    liq_off_.assign(n + 1, 0);
    bnd_off_.assign(n + 1, 0);
    liq_.clear();
    bnd_.clear();
    const double H2 = cfg_.kernel_radius * cfg_.kernel_radius;
    for (int i = 0; i < n; ++i) {
      grid_.for_each_near(pred_[i], [&](int id) {
        if (id != i && norm_sq(pred_[i] - pred_[id]) < H2) liq_.push_back(id);
      });
      bnd_grid_.for_each_near(pred_[i], [&](int b) {
        if (norm_sq(pred_[i] - bnd_pos_[b]) < H2) bnd_.push_back(b);
      });
      liq_off_[i + 1] = static_cast<int>(liq_.size());
      bnd_off_[i + 1] = static_cast<int>(bnd_.size());
    }
  }

  void solve_density(int n) {
    lambda_.resize(n);
    dx_.resize(n);
    liq_s_.resize(liq_.size());
    bnd_s_.resize(bnd_.size());
    const double inv_rc = 1.0 / constraint_density_;
    const double eps = 1.0 / cfg_.stiffness;
    const double H2 = cfg_.kernel_radius * cfg_.kernel_radius;
    // Both ends of a violated pair correct the same constraint, so a full
    // Jacobi sweep overshoots (a lone pair by exactly 2x) and rings instead
    // of converging; under-relaxation makes the sweep contractive. The cap
    // bounds how much velocity one solve can hand a single particle.
    const double relax = 0.5;
    const double dx_cap = 0.5 * cfg_.particle_spacing;
    for (int it = 0; it < cfg_.pressure_iterations; ++it) {
      // Positions are frozen within one iteration, so the per-pair kernel
      // slope computed here is reused verbatim by the displacement pass.
      for (int i = 0; i < n; ++i) {
        double rho = mass_ * kernel_.w(0.0);
        Vec2 grad_i{0.0, 0.0};
        double grad_sq = 0.0;
        for (int k = liq_off_[i]; k < liq_off_[i + 1]; ++k) {
          const Vec2 rij = pred_[i] - pred_[liq_[k]];
          const double r2 = norm_sq(rij);
          if (r2 >= H2) {
            liq_s_[k] = 0.0;
            continue;
          }
          const double r = std::sqrt(r2);
          rho += mass_ * kernel_.w(r);
          if (r > 1e-12) {
            const double s = kernel_.dw(r) / r * mass_ * inv_rc;
            liq_s_[k] = s;
            const Vec2 g = rij * s;
            grad_i += g;
            grad_sq += norm_sq(g);
          } else {
            liq_s_[k] = 0.0;
          }
        }
        for (int k = bnd_off_[i]; k < bnd_off_[i + 1]; ++k) {
          const int b = bnd_[k];
          const Vec2 rib = pred_[i] - bnd_pos_[b];
          const double r2 = norm_sq(rib);
          if (r2 >= H2) {
            bnd_s_[k] = 0.0;
            continue;
          }
          const double r = std::sqrt(r2);
          rho += bnd_psi_[b] * kernel_.w(r);
          if (r > 1e-12) {
            const double s = kernel_.dw(r) / r * bnd_psi_[b] * inv_rc;
            bnd_s_[k] = s;
            grad_i += rib * s;
          } else {
            bnd_s_[k] = 0.0;
          }
        }
        const double c = rho * inv_rc - 1.0;
        lambda_[i] = c > 0.0 ? -c / (norm_sq(grad_i) + grad_sq + eps) : 0.0;
      }
      for (int i = 0; i < n; ++i) {
        Vec2 dx{0.0, 0.0};
        for (int k = liq_off_[i]; k < liq_off_[i + 1]; ++k) {
          const double s = liq_s_[k];
          if (s == 0.0) continue;
          const int j = liq_[k];
          dx += (pred_[i] - pred_[j]) * (s * (lambda_[i] + lambda_[j]));
        }
        for (int k = bnd_off_[i]; k < bnd_off_[i + 1]; ++k) {
          const double s = bnd_s_[k];
          if (s == 0.0) continue;
          dx += (pred_[i] - bnd_pos_[bnd_[k]]) * (s * 2.0 * lambda_[i]);
        }
        dx *= relax;
        const double len = norm(dx);
        if (len > dx_cap) dx *= dx_cap / len;
        dx_[i] = dx;
      }
      for (int i = 0; i < n; ++i) pred_[i] += dx_[i];
    }
  }

  // Swept sphere projection from the pre-step position to the predicted one.
  // Catches both end-state penetration and pass-through at high speed.
  void project_walls(int n) {
    if (bnd_pos_.empty()) return;
    for (int i = 0; i < n; ++i) {
      const Vec2 origin = pos_[i];
      Vec2 p = pred_[i];
      for (int pass = 0; pass < 3; ++pass) {
        bool moved = false;
        const Vec2 lo{std::min(origin.x, p.x), std::min(origin.y, p.y)};
        const Vec2 hi{std::max(origin.x, p.x), std::max(origin.y, p.y)};
        const double m = bnd_margin_;
        bnd_grid_.for_each_in_box(lo - Vec2{m, m}, hi + Vec2{m, m}, [&](int b) {
          const double rc = bnd_radius_[b] + contact_offset_;
          const Vec2 c = bnd_pos_[b];
          // Sweep in the sphere's co-moving frame: spheres are sampled at the
          // end-of-step pose, so advancing the path start by the boundary
          // displacement turns [o, p] vs c into the relative-motion test. A
          // moving wall otherwise reads as a radial collision and drags
          // resting particles sideways.
          const Vec2 o = origin + bnd_vel_[b] * cfg_.dt;
          const Vec2 d = p - o;
          const double dd = norm_sq(d);
          const double s = dd > 0.0 ? std::clamp(dot(c - o, d) / dd, 0.0, 1.0) : 0.0;
          const Vec2 q = o + d * s;
          const Vec2 delta = q - c;
          const double dist = norm(delta);
          if (dist < rc) {
            const Vec2 nrm = dist > 1e-12 ? delta / dist : Vec2{0.0, 1.0};
            p = c + nrm * rc;
            moved = true;
          }
        });
        if (!moved) break;
      }
      pred_[i] = p;
    }
  }

  double max_bnd_radius_() const {
    double r = 0.0;
    for (double v : bnd_radius_) r = std::max(r, v);
    return r;
  }

  double max_bnd_speed_() const {
    double s = 0.0;
    for (const Vec2& v : bnd_vel_) s = std::max(s, norm_sq(v));
    return std::sqrt(s);
  }

  void apply_xsph(int n) {
    acc_.assign(n, Vec2{0.0, 0.0});
    const double H2 = cfg_.kernel_radius * cfg_.kernel_radius;
    for (int i = 0; i < n; ++i) {
      Vec2 dv{0.0, 0.0};
      for (int k = liq_off_[i]; k < liq_off_[i + 1]; ++k) {
        const int j = liq_[k];
        const double r2 = norm_sq(pos_[i] - pos_[j]);
        if (r2 >= H2) continue;
        dv += (vel_[j] - vel_[i]) * (mass_ / lattice_density_ * kernel_.w(std::sqrt(r2)));
      }
      acc_[i] = dv;
    }
    for (int i = 0; i < n; ++i) vel_[i] += acc_[i] * cfg_.velocity_smoothing;
  }

  SimConfig cfg_;
  detail::CubicKernel kernel_;
  double mass_ = 0.0;
  double lattice_density_ = 0.0;
  double constraint_density_ = 0.0;
  double contact_offset_ = 0.0;
  double bnd_margin_ = 0.0;
  long step_count_ = 0;

  detail::NeighborGrid grid_, bnd_grid_;
  std::map<const Container*, std::vector<double>> volume_cache_;
  std::vector<Vec2> pos_, vel_, pred_, acc_, dx_;
  std::vector<double> lambda_, liq_s_, bnd_s_;
  std::vector<Vec2> bnd_pos_, bnd_vel_;
  std::vector<double> bnd_psi_, bnd_radius_;
  std::vector<int> liq_, bnd_;
  std::vector<int> liq_off_, bnd_off_;
};

// Snapshot export: "# t=<time> n=<count>" then one "px py vx vy" per line.
inline void write_snapshot(std::ostream& out, const LiquidState& state) {
  out.precision(17);
  out << "# t=" << state.time << " n=" << state.particles.size() << "\n";
  for (const Particle& p : state.particles)
    out << p.position.x << " " << p.position.y << " " << p.velocity.x << " "
        << p.velocity.y << "\n";
}

inline LiquidState read_snapshot(std::istream& in) {
  LiquidState state;
  std::string header;
  if (!std::getline(in, header) || header.rfind("# t=", 0) != 0)
    throw FileFormatError("snapshot: missing header");
  const auto npos = header.find(" n=");
  if (npos == std::string::npos) throw FileFormatError("snapshot: missing count");
  state.time = std::stod(header.substr(4, npos - 4));
  const std::size_t n = std::stoull(header.substr(npos + 3));
  state.particles.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Particle& p = state.particles[i];
    if (!(in >> p.position.x >> p.position.y >> p.velocity.x >> p.velocity.y))
      throw FileFormatError("snapshot: truncated particle data");
  }
  in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  return state;
}

}  // namespace pourplan
