#pragma once

// Monte Carlo solvers for the backward rough PDE and the forward
// measure-valued equation, via the Feynman-Kac representations
//   u(t,x)    = E[ g(X_T) exp( int_t^T c(X) dr + int_t^T gamma(X) dW ) ]
//   rho_t(f)  = E[ f(X_t) exp( int_0^t c(X) dr + int_0^t gamma(X) dW ) ]
// along the rough SDE dX = b dt + sigma dB + beta dW solved against the
// joint lift. Weights are accumulated in log space; the gamma integral is
// the compensated sum of the controlled integrand (gamma(X), Dgamma(X) V(X))
// against the W-columns of the joint second level.

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rpde/coefficients.hpp"
#include "rpde/grid.hpp"
#include "rpde/joint_lift.hpp"
#include "rpde/rde.hpp"
#include "rpde/rng.hpp"
#include "rpde/rough_path.hpp"

namespace rpde {

struct McParams {
  int particles = 1000;
  std::uint64_t seed = 0;
  int subgrid = 16;       // Brownian refinement per driver step
  int threads = 1;
  bool common_rng = true;  // share one Brownian per particle across (t,x)

  void validate() const {
    if (particles < 1) throw std::invalid_argument("McParams: particles must be >= 1");
    if (subgrid < 1) throw std::invalid_argument("McParams: subgrid must be >= 1");
    if (threads < 1) throw std::invalid_argument("McParams: threads must be >= 1");
  }
};

namespace detail {

// Runs fn(block) for block = 0..n_blocks-1 over `threads` workers. Blocks
// write to disjoint slots, so the result is independent of scheduling.
inline void run_blocks(std::size_t n_blocks, int threads,
                       const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n_blocks <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      fn(b);
    }
  };
  std::vector<std::thread> pool;
  const int nw = static_cast<int>(std::min<std::size_t>(threads, n_blocks));
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// Per-particle Brownian data on the driver grid: joint increments dz and
// second-level blocks da in the (B, W) component order.
struct HybridSteps {
  std::vector<VectorXd> dz;
  std::vector<MatrixXd> da;
};

template <typename Rng>
void fill_hybrid_steps(const GeometricRoughPath& w, int m, int refine, Rng& rng,
                       HybridSteps& out) {
  const int e = w.dim();
  const int dim = m + e;
  const std::size_t n = w.grid().steps();
  if (out.dz.size() != n) {
    out.dz.assign(n, VectorXd::Zero(dim));
    out.da.assign(n, MatrixXd::Zero(dim, dim));
  }
  VectorXd sub(m), pre(m), isum(m);
  for (std::size_t k = 0; k < n; ++k) {
    const double sd = std::sqrt(w.grid().dt(k) / refine);
    pre.setZero();
    isum.setZero();
    MatrixXd& a = out.da[k];
    a.setZero();
    auto ito = a.topLeftCorner(m, m);
    for (int s = 0; s < refine; ++s) {
      for (int c = 0; c < m; ++c) sub[c] = sd * rng.gaussian();
      ito.noalias() += pre * sub.transpose();
      isum += pre;
      pre += sub;
    }
    const VectorXd dw = w.step_increment(k);
    a.topRightCorner(m, e) = (isum / refine) * dw.transpose();
    a.bottomLeftCorner(e, m) = dw * pre.transpose() - a.topRightCorner(m, e).transpose();
    a.bottomRightCorner(e, e) = w.step_area(k);
    out.dz[k].head(m) = pre;
    out.dz[k].tail(e) = dw;
  }
}

// Scratch space for the in-line Davie stepper.
struct ParticleWorkspace {
  HybridSteps steps;
  MatrixXd vmat;               // d x (m+e)
  std::vector<MatrixXd> jacs;  // per driver component, d x d
  VectorXd x, dx, gg;

  void resize(int d, int dim) {
    vmat.resize(d, dim);
    jacs.assign(dim, MatrixXd::Zero(d, d));
    x.resize(d);
    dx.resize(d);
    gg.resize(d);
  }
};

// Advance one Davie step and accumulate the log-weight contributions. The
// trapezoid half of the c-integral at the new state is added by the caller
// loop so that each state is evaluated once.
inline void hybrid_step(const OperatorCoefficients& co, const VectorXd& dz,
                        const MatrixXd& da, double dt, ParticleWorkspace& ws,
                        double& logw) {
  const int d = co.dim_state, m = co.dim_brownian, e = co.dim_driver;
  const int dim = m + e;
  for (int j = 0; j < m; ++j) {
    ws.vmat.col(j) = co.sigma[j].value(ws.x);
    ws.jacs[j] = co.sigma[j].jac(ws.x);
  }
  for (int j = 0; j < e; ++j) {
    ws.vmat.col(m + j) = co.beta[j].value(ws.x);
    ws.jacs[m + j] = co.beta[j].jac(ws.x);
  }
  // weight: 1/2 c dt (left half) + gamma compensated sum, at the left point
  if (co.c.value) logw += 0.5 * dt * co.c.value(ws.x);
  for (int k = 0; k < e; ++k) {
    if (co.gamma.empty() || co.gamma[k].empty()) continue;
    logw += co.gamma[k].value(ws.x) * dz[m + k];
    if (co.gamma[k].grad) {
      ws.gg = co.gamma[k].grad(ws.x);
      for (int j = 0; j < dim; ++j)
        logw += ws.gg.dot(ws.vmat.col(j)) * da(j, m + k);
    }
  }
  // state update
  ws.dx.noalias() = ws.vmat * dz;
  for (int k = 0; k < dim; ++k)
    ws.dx.noalias() += ws.jacs[k] * (ws.vmat * da.col(k));
  if (co.has_drift()) ws.dx += dt * co.b.value(ws.x);
  ws.x += ws.dx;
  if (!ws.x.allFinite())
    throw std::runtime_error("feynman_kac: particle state became non-finite");
  if (co.c.value) logw += 0.5 * dt * co.c.value(ws.x);
  (void)d;
}

inline void check_weight(double logw) {
  if (logw > 700.0)
    throw std::runtime_error("feynman_kac: weight overflow (log weight > 700)");
}

}  // namespace detail

// exp( int c dr + int gamma dW ) along a precomputed trajectory against a
// joint lift; the trajectory must live on the lift grid.
inline double exp_weight(const OperatorCoefficients& co, const StatePath& traj,
                         const JointLift& lift) {
  co.validate();
  const auto& grid = lift.grid();
  if (traj.states.size() != grid.size())
    throw std::invalid_argument("exp_weight: trajectory does not match lift grid");
  const int m = co.dim_brownian, e = co.dim_driver;
  double logw = 0.0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const VectorXd& x = traj.states[k];
    const double dt = grid.dt(k);
    if (co.c.value)
      logw += 0.5 * dt * (co.c.value(x) + co.c.value(traj.states[k + 1]));
    const VectorXd dz = lift.step_increment(k);
    const MatrixXd da = lift.step_area(k);
    for (int kk = 0; kk < e; ++kk) {
      if (co.gamma.empty() || co.gamma[kk].empty()) continue;
      logw += co.gamma[kk].value(x) * dz[m + kk];
      if (co.gamma[kk].grad) {
        const VectorXd gg = co.gamma[kk].grad(x);
        for (int j = 0; j < m; ++j)
          logw += gg.dot(co.sigma[j].value(x)) * da(j, m + kk);
        for (int j = 0; j < e; ++j)
          logw += gg.dot(co.beta[j].value(x)) * da(m + j, m + kk);
      }
    }
  }
  detail::check_weight(logw);
  return std::exp(logw);
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

struct BackwardField {
  std::vector<std::size_t> t_indices;     // into the driver grid
  std::vector<double> times;
  std::vector<VectorXd> points;           // spatial evaluation points
  std::vector<std::vector<double>> values;      // [time][point]
  std::vector<std::vector<double>> std_errors;  // [time][point]
  int particles = 0;
  std::uint64_t seed = 0;

  double value_at(std::size_t t_slice, std::size_t point) const {
    return values[t_slice][point];
  }
};

// u(t_i, x_p) for every requested grid index and point, one Brownian per
// particle shared across all (t,x) when common_rng is set.
inline BackwardField backward_field(const OperatorCoefficients& co,
                                    const ScalarField& g,
                                    const std::vector<std::size_t>& t_indices,
                                    const std::vector<VectorXd>& points,
                                    const RoughPathPtr& driver, const McParams& mc) {
  co.validate();
  mc.validate();
  if (!g.value) throw std::invalid_argument("backward_field: terminal datum missing");
  if (driver->dim() != co.dim_driver)
    throw std::invalid_argument("backward_field: driver dimension mismatch");
  const auto& grid = driver->grid();
  const std::size_t last = grid.size() - 1;
  for (std::size_t t : t_indices)
    if (t > last) throw std::invalid_argument("backward_field: t index out of range");

  BackwardField out;
  out.t_indices = t_indices;
  for (std::size_t t : t_indices) out.times.push_back(grid[t]);
  out.points = points;
  out.particles = mc.particles;
  out.seed = mc.seed;

  const std::size_t n_cells = t_indices.size() * points.size();
  std::vector<std::vector<double>> samples(n_cells,
                                           std::vector<double>(mc.particles));

  const std::size_t block = 256;
  const std::size_t n_blocks = (mc.particles + block - 1) / block;
  const int d = co.dim_state, m = co.dim_brownian, e = co.dim_driver;

  detail::run_blocks(n_blocks, mc.threads, [&](std::size_t bi) {
    detail::ParticleWorkspace ws;
    ws.resize(d, m + e);
    const std::size_t p0 = bi * block;
    const std::size_t p1 = std::min<std::size_t>(mc.particles, p0 + block);
    for (std::size_t p = p0; p < p1; ++p) {
      // one Brownian per particle; offset streams decorrelate (t,x) cells
      // when common random numbers are disabled
      const std::uint64_t base_stream =
          mc.common_rng ? p : p * (n_cells + 1);
      if (mc.common_rng) {
        RngStream rng(mc.seed, base_stream);
        detail::fill_hybrid_steps(*driver, m, mc.subgrid, rng, ws.steps);
      }
      std::size_t cell = 0;
      for (std::size_t ti = 0; ti < t_indices.size(); ++ti) {
        const std::size_t start = t_indices[ti];
        for (std::size_t pi = 0; pi < points.size(); ++pi, ++cell) {
          if (!mc.common_rng) {
            RngStream rng(mc.seed, base_stream + cell);
            detail::fill_hybrid_steps(*driver, m, mc.subgrid, rng, ws.steps);
          }
          ws.x = points[pi];
          double logw = 0.0;
          for (std::size_t k = start; k < last; ++k)
            detail::hybrid_step(co, ws.steps.dz[k], ws.steps.da[k], grid.dt(k),
                                ws, logw);
          detail::check_weight(logw);
          samples[cell][p] = g.value(ws.x) * std::exp(logw);
        }
      }
    }
  });

  out.values.resize(t_indices.size());
  out.std_errors.resize(t_indices.size());
  std::size_t cell = 0;
  for (std::size_t ti = 0; ti < t_indices.size(); ++ti) {
    out.values[ti].resize(points.size());
    out.std_errors[ti].resize(points.size());
    for (std::size_t pi = 0; pi < points.size(); ++pi, ++cell) {
      const auto mv = pairwise_mean_var(samples[cell]);
      out.values[ti][pi] = mv.mean;
      out.std_errors[ti][pi] = mv.std_error;
    }
  }
  return out;
}

inline McEstimate backward_value(const OperatorCoefficients& co, const ScalarField& g,
                                 std::size_t t_index, const VectorXd& x,
                                 const RoughPathPtr& driver, const McParams& mc) {
  const auto field = backward_field(co, g, {t_index}, {x}, driver, mc);
  return {field.values[0][0], field.std_errors[0][0]};
}

// Initial measure nu = mass * (probability law of the sampler).
struct InitialMeasure {
  double mass = 1.0;
  std::function<VectorXd(RngStream&)> sampler;

  static InitialMeasure dirac(const VectorXd& x, double mass = 1.0) {
    InitialMeasure nu;
    nu.mass = mass;
    nu.sampler = [x](RngStream&) { return x; };
    return nu;
  }
  static InitialMeasure gaussian(const VectorXd& mean, double sd, double mass = 1.0) {
    InitialMeasure nu;
    nu.mass = mass;
    nu.sampler = [mean, sd](RngStream& rng) {
      VectorXd x(mean.size());
      for (int i = 0; i < mean.size(); ++i) x[i] = mean[i] + sd * rng.gaussian();
      return x;
    };
    return nu;
  }

  void validate() const {
    if (!sampler) throw std::invalid_argument("InitialMeasure: sampler missing");
    if (!(mass > 0.0)) throw std::invalid_argument("InitialMeasure: mass must be > 0");
  }
};

// Weighted particle representation of the forward solution, recorded at the
// requested grid slices. rho_t(f) = mass * mean_i( w_i f(X_i) ).
struct ParticleMeasure {
  std::vector<std::size_t> slice_indices;
  std::vector<double> times;
  double mass = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<VectorXd>> positions;   // [slice][particle]
  std::vector<std::vector<double>> log_weights;   // [slice][particle]

  std::size_t particles() const {
    return positions.empty() ? 0 : positions[0].size();
  }

  McEstimate pair(const std::function<double(const VectorXd&)>& f,
                  std::size_t slice) const {
    const std::size_t n = particles();
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = std::exp(log_weights[slice][i]) * f(positions[slice][i]);
    const auto mv = pairwise_mean_var(vals);
    return {mass * mv.mean, mass * mv.std_error};
  }

  McEstimate total_mass(std::size_t slice) const {
    return pair([](const VectorXd&) { return 1.0; }, slice);
  }
};

inline ParticleMeasure forward_measure(const OperatorCoefficients& co,
                                       const InitialMeasure& nu,
                                       const RoughPathPtr& driver, const McParams& mc,
                                       std::vector<std::size_t> slices = {}) {
  co.validate();
  mc.validate();
  nu.validate();
  if (driver->dim() != co.dim_driver)
    throw std::invalid_argument("forward_measure: driver dimension mismatch");
  const auto& grid = driver->grid();
  if (slices.empty())
    for (std::size_t i = 0; i < grid.size(); ++i) slices.push_back(i);
  for (std::size_t s : slices)
    if (s >= grid.size())
      throw std::invalid_argument("forward_measure: slice index out of range");

  ParticleMeasure out;
  out.slice_indices = slices;
  for (std::size_t s : slices) out.times.push_back(grid[s]);
  out.mass = nu.mass;
  out.seed = mc.seed;
  out.positions.assign(slices.size(), std::vector<VectorXd>(mc.particles));
  out.log_weights.assign(slices.size(), std::vector<double>(mc.particles, 0.0));

  const std::size_t block = 256;
  const std::size_t n_blocks = (mc.particles + block - 1) / block;
  const int d = co.dim_state, m = co.dim_brownian, e = co.dim_driver;

  detail::run_blocks(n_blocks, mc.threads, [&](std::size_t bi) {
    detail::ParticleWorkspace ws;
    ws.resize(d, m + e);
    const std::size_t p0 = bi * block;
    const std::size_t p1 = std::min<std::size_t>(mc.particles, p0 + block);
    for (std::size_t p = p0; p < p1; ++p) {
      RngStream rng(mc.seed, p);
      ws.x = nu.sampler(rng);
      detail::fill_hybrid_steps(*driver, m, mc.subgrid, rng, ws.steps);
      double logw = 0.0;
      std::size_t next_slice = 0;
      auto record = [&](std::size_t grid_idx) {
        while (next_slice < slices.size() && slices[next_slice] == grid_idx) {
          out.positions[next_slice][p] = ws.x;
          out.log_weights[next_slice][p] = logw;
          ++next_slice;
        }
      };
      record(0);
      for (std::size_t k = 0; k < grid.steps(); ++k) {
        detail::hybrid_step(co, ws.steps.dz[k], ws.steps.da[k], grid.dt(k), ws, logw);
        detail::check_weight(logw);
        record(k + 1);
      }
    }
  });
  return out;
}

// Density of the forward solution via the adjoint backward representation:
// p_t(x) = u*(T - t, x) where u* solves the backward problem with adjoint
// coefficients, terminal datum p0, and the reversed-reflected driver
// \bar W_s = -W_{T-s}.
inline BackwardField forward_density(const OperatorCoefficients& co,
                                     const ScalarField& p0,
                                     const std::vector<std::size_t>& t_indices,
                                     const std::vector<VectorXd>& points,
                                     const RoughPathPtr& driver, const McParams& mc) {
  const auto adj = adjoint_coefficients(co);
  auto reversed = std::make_shared<GeometricRoughPath>(driver->time_reversed_negated());
  const std::size_t last = driver->grid().size() - 1;
  std::vector<std::size_t> rev_indices;
  for (std::size_t t : t_indices) rev_indices.push_back(last - t);
  BackwardField field = backward_field(adj, p0, rev_indices, points, reversed, mc);
  field.t_indices = t_indices;
  field.times.clear();
  for (std::size_t t : t_indices) field.times.push_back(driver->grid()[t]);
  return field;
}

}  // namespace rpde
