#pragma once

// Grid-sampled level-2 rough paths: first-level increments W_{s,t} and
// second-level areas A_{s,t} = \int_s^t W_{s,r} (x) dW_r stored per
// consecutive grid pair; arbitrary-pair data is recovered through Chen's
// relation, so associativity holds by construction.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rpde/grid.hpp"
#include "rpde/rng.hpp"

namespace rpde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Level-2 increment over one interval: (W_{s,t}, A_{s,t}).
struct Level2Increment {
  VectorXd w;
  MatrixXd area;

  static Level2Increment zero(int dim) {
    return {VectorXd::Zero(dim), MatrixXd::Zero(dim, dim)};
  }
};

// Chen relation: (s,t) * (t,u) -> (s,u).
//   W_{s,u} = W_{s,t} + W_{t,u}
//   A_{s,u} = A_{s,t} + A_{t,u} + W_{s,t} (x) W_{t,u}
inline Level2Increment chen_compose(const Level2Increment& left,
                                    const Level2Increment& right) {
  if (left.w.size() != right.w.size())
    throw std::invalid_argument("chen_compose: dimension mismatch");
  Level2Increment out;
  out.w = left.w + right.w;
  out.area = left.area + right.area + left.w * right.w.transpose();
  return out;
}

class GeometricRoughPath {
 public:
  GeometricRoughPath() = default;

  // Per-step increments and areas; prefix sums are precomputed so that any
  // (i,j) increment reads off in O(dim^2).
  GeometricRoughPath(TimeGrid grid, double alpha,
                     std::vector<VectorXd> step_increments,
                     std::vector<MatrixXd> step_areas,
                     VectorXd base_point = VectorXd())
      : grid_(std::move(grid)), alpha_(alpha) {
    if (!(alpha_ > 1.0 / 3.0 && alpha_ <= 0.5))
      throw std::invalid_argument("GeometricRoughPath: alpha must be in (1/3, 1/2]");
    if (step_increments.size() != grid_.steps() ||
        step_areas.size() != grid_.steps())
      throw std::invalid_argument("GeometricRoughPath: step data does not match grid");
    dim_ = static_cast<int>(step_increments.front().size());
    for (std::size_t k = 0; k < step_increments.size(); ++k) {
      if (step_increments[k].size() != dim_ || step_areas[k].rows() != dim_ ||
          step_areas[k].cols() != dim_)
        throw std::invalid_argument("GeometricRoughPath: inconsistent dimensions");
    }
    base_ = base_point.size() == dim_ ? base_point : VectorXd::Zero(dim_);

    prefix_w_.resize(grid_.size());
    prefix_a_.resize(grid_.size());
    prefix_w_[0] = VectorXd::Zero(dim_);
    prefix_a_[0] = MatrixXd::Zero(dim_, dim_);
    for (std::size_t k = 0; k < grid_.steps(); ++k) {
      prefix_w_[k + 1] = prefix_w_[k] + step_increments[k];
      prefix_a_[k + 1] = prefix_a_[k] + step_areas[k] +
                         prefix_w_[k] * step_increments[k].transpose();
    }
  }

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  const VectorXd& base_point() const { return base_; }

  // Path value W_{t_i} = W_0 + W_{0,t_i}.
  VectorXd value(std::size_t i) const { return base_ + prefix_w_[i]; }

  // First-level increment over grid pair (i, j), i <= j.
  VectorXd increment(std::size_t i, std::size_t j) const {
    return prefix_w_[j] - prefix_w_[i];
  }

  // Second-level area over grid pair (i, j), from the prefix form of Chen:
  //   A_{i,j} = A_{0,j} - A_{0,i} - W_{0,i} (x) W_{i,j}
  MatrixXd area(std::size_t i, std::size_t j) const {
    return prefix_a_[j] - prefix_a_[i] -
           prefix_w_[i] * (prefix_w_[j] - prefix_w_[i]).transpose();
  }

  Level2Increment level2(std::size_t i, std::size_t j) const {
    return {increment(i, j), area(i, j)};
  }

  VectorXd step_increment(std::size_t k) const { return increment(k, k + 1); }
  MatrixXd step_area(std::size_t k) const { return area(k, k + 1); }

  // Worst geometricity defect max_k |Sym(A_k) - 1/2 w_k w_k^T| over steps.
  double geometricity_defect() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < grid_.steps(); ++k) {
      const VectorXd w = step_increment(k);
      const MatrixXd a = step_area(k);
      const MatrixXd sym = 0.5 * (a + a.transpose()) - 0.5 * w * w.transpose();
      worst = std::max(worst, sym.cwiseAbs().maxCoeff());
    }
    return worst;
  }

  // Grid Hoelder functionals: max |W_{s,t}| / (t-s)^alpha and
  // max |A_{s,t}| / (t-s)^(2 alpha) over all grid pairs (lower bounds of the
  // continuum norms).
  std::pair<double, double> holder_norms() const {
    double first = 0.0, second = 0.0;
    const std::size_t n = grid_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dt = grid_[j] - grid_[i];
        const double wn = increment(i, j).norm();
        const double an = area(i, j).norm();
        first = std::max(first, wn / std::pow(dt, alpha_));
        second = std::max(second, an / std::pow(dt, 2.0 * alpha_));
      }
    }
    return {first, second};
  }

  // Time reversal \hat W_s := W_{T-s}: increments negate and mirror, areas
  // follow -A_{a,b} + W_{a,b} (x) W_{a,b} (equals A^T for geometric lifts).
  GeometricRoughPath time_reversed() const {
    const std::size_t n = grid_.steps();
    std::vector<double> times(grid_.size());
    const double T = grid_.horizon();
    for (std::size_t i = 0; i < grid_.size(); ++i)
      times[i] = T - grid_[grid_.size() - 1 - i];
    times.front() = 0.0;
    std::vector<VectorXd> inc(n);
    std::vector<MatrixXd> ar(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t src = n - 1 - k;
      const VectorXd w = step_increment(src);
      inc[k] = -w;
      ar[k] = -step_area(src) + w * w.transpose();
    }
    return GeometricRoughPath(TimeGrid(std::move(times)), alpha_, std::move(inc),
                              std::move(ar), value(grid_.size() - 1));
  }

  // Reversed and reflected path \bar W_s := -W_{T-s}; this is the driver of
  // the adjoint backward representation of forward densities. First level
  // keeps the forward increments (mirrored), areas as in time_reversed().
  GeometricRoughPath time_reversed_negated() const {
    GeometricRoughPath rev = time_reversed();
    for (auto& w : rev.prefix_w_) w = -w;
    rev.base_ = -rev.base_;
    return rev;
  }

  // Keep every `factor`-th grid point (and the endpoint); increments and
  // areas compose through Chen, so the coarse path is a restriction, not an
  // approximation.
  GeometricRoughPath coarsened(std::size_t factor) const {
    if (factor < 1) throw std::invalid_argument("coarsened: factor must be >= 1");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < grid_.size() - 1; i += factor) keep.push_back(i);
    keep.push_back(grid_.size() - 1);
    std::vector<double> times(keep.size());
    std::vector<VectorXd> inc(keep.size() - 1);
    std::vector<MatrixXd> ar(keep.size() - 1);
    for (std::size_t k = 0; k < keep.size(); ++k) times[k] = grid_[keep[k]];
    for (std::size_t k = 0; k + 1 < keep.size(); ++k) {
      inc[k] = increment(keep[k], keep[k + 1]);
      ar[k] = area(keep[k], keep[k + 1]);
    }
    return GeometricRoughPath(TimeGrid(std::move(times)), alpha_, std::move(inc),
                              std::move(ar), base_);
  }

  // Restriction to the sub-grid [i0, i1], times shifted to start at 0.
  GeometricRoughPath window(std::size_t i0, std::size_t i1) const {
    if (i1 <= i0 || i1 > grid_.size() - 1)
      throw std::invalid_argument("GeometricRoughPath: invalid window");
    std::vector<double> times(i1 - i0 + 1);
    for (std::size_t i = i0; i <= i1; ++i) times[i - i0] = grid_[i] - grid_[i0];
    std::vector<VectorXd> inc(i1 - i0);
    std::vector<MatrixXd> ar(i1 - i0);
    for (std::size_t k = i0; k < i1; ++k) {
      inc[k - i0] = step_increment(k);
      ar[k - i0] = step_area(k);
    }
    return GeometricRoughPath(TimeGrid(std::move(times)), alpha_, std::move(inc),
                              std::move(ar), value(i0));
  }

 private:
  TimeGrid grid_;
  int dim_ = 0;
  double alpha_ = 0.5;
  VectorXd base_;
  std::vector<VectorXd> prefix_w_;  // W_{0, t_i}
  std::vector<MatrixXd> prefix_a_;  // A_{0, t_i}
};

using RoughPathPtr = std::shared_ptr<const GeometricRoughPath>;

// Canonical lift of the piecewise-linear interpolant of the given samples:
// per segment A = 1/2 w w^T, so each segment (and by Chen every composed
// increment) is geometric.
inline GeometricRoughPath lift_piecewise_linear(const TimeGrid& grid,
                                                const std::vector<VectorXd>& samples,
                                                double alpha) {
  if (samples.size() != grid.size())
    throw std::invalid_argument("lift_piecewise_linear: samples do not match grid");
  if (samples.size() < 2)
    throw std::invalid_argument("lift_piecewise_linear: need at least 2 samples");
  const std::size_t n = grid.steps();
  std::vector<VectorXd> inc(n);
  std::vector<MatrixXd> ar(n);
  for (std::size_t k = 0; k < n; ++k) {
    inc[k] = samples[k + 1] - samples[k];
    ar[k] = 0.5 * inc[k] * inc[k].transpose();
  }
  return GeometricRoughPath(grid, alpha, std::move(inc), std::move(ar), samples[0]);
}

// Scalar-path convenience overload.
inline GeometricRoughPath lift_piecewise_linear(const TimeGrid& grid,
                                                const std::vector<double>& samples,
                                                double alpha) {
  std::vector<VectorXd> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    v[i] = VectorXd::Constant(1, samples[i]);
  }
  return lift_piecewise_linear(grid, v, alpha);
}

// Brownian rough path: Gaussian increments with variance = step length;
// Levy area simulated by left-point sums on a subgrid of `refine` substeps,
// antisymmetrized, and added to 1/2 w w^T so the lift is exactly geometric.
template <typename Rng = RngStream>
GeometricRoughPath brownian_lift(Rng rng, const TimeGrid& grid,
                                 int dim, double alpha = 0.45,
                                 int refine = 16) {
  if (dim < 1) throw std::invalid_argument("brownian_lift: dim must be >= 1");
  if (refine < 1) throw std::invalid_argument("brownian_lift: refine must be >= 1");
  const std::size_t n = grid.steps();
  std::vector<VectorXd> inc(n);
  std::vector<MatrixXd> ar(n);
  VectorXd sub(dim), prefix(dim);
  for (std::size_t k = 0; k < n; ++k) {
    const double sd = std::sqrt(grid.dt(k) / refine);
    prefix.setZero();
    MatrixXd raw = MatrixXd::Zero(dim, dim);
    VectorXd total = VectorXd::Zero(dim);
    for (int s = 0; s < refine; ++s) {
      for (int c = 0; c < dim; ++c) sub[c] = sd * rng.gaussian();
      raw.noalias() += prefix * sub.transpose();
      prefix += sub;
    }
    total = prefix;
    const MatrixXd anti = 0.5 * (raw - raw.transpose());
    inc[k] = total;
    ar[k] = 0.5 * total * total.transpose() + anti;
  }
  return GeometricRoughPath(grid, alpha, std::move(inc), std::move(ar));
}

// 2-d "pure area" driver: zero first level, area per step = rate * dt * J
// with J the standard symplectic matrix. Useful as a driver that moves only
// through Levy area.
inline GeometricRoughPath pure_area_path(const TimeGrid& grid, double rate = 1.0,
                                         double alpha = 0.5) {
  const std::size_t n = grid.steps();
  MatrixXd j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  std::vector<VectorXd> inc(n, VectorXd::Zero(2));
  std::vector<MatrixXd> ar(n);
  for (std::size_t k = 0; k < n; ++k) ar[k] = rate * grid.dt(k) * j;
  return GeometricRoughPath(grid, alpha, std::move(inc), std::move(ar));
}

// Hoelder-scaled distance between two rough paths on the same grid:
// max over grid pairs of |dW|/(t-s)^alpha and |dA|/(t-s)^(2 alpha).
inline double rough_metric(const GeometricRoughPath& a,
                           const GeometricRoughPath& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("rough_metric: dimension mismatch");
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("rough_metric: paths must share a grid (resample first)");
  const double alpha = a.alpha();
  double worst = 0.0;
  const std::size_t n = a.grid().size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dt = a.grid()[j] - a.grid()[i];
      const double dw = (a.increment(i, j) - b.increment(i, j)).norm();
      const double da = (a.area(i, j) - b.area(i, j)).norm();
      worst = std::max(worst, dw / std::pow(dt, alpha));
      worst = std::max(worst, da / std::pow(dt, 2.0 * alpha));
    }
  }
  return worst;
}

}  // namespace rpde
