#pragma once

// Controlled-path calculus: pairs (Y, Y') with Y_{s,t} = Y'_s W_{s,t} + R_{s,t},
// rough integration by compensated sums, products, smooth composition, time
// reversal and grid estimates of the controlled seminorm.
//
// Values are matrices (rows x cols); the Gubinelli derivative is stored as a
// (rows*cols) x dim matrix in row-major entry order:
//   deriv(r*cols + c, j) = d value(r,c) / d direction j.
// Scalar paths are the 1x1 case.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rpde/rough_path.hpp"

namespace rpde {

struct ControlledPath {
  RoughPathPtr reference;
  std::vector<MatrixXd> values;  // one per grid point
  std::vector<MatrixXd> derivs;  // (rows*cols) x dim, one per grid point

  std::size_t points() const { return values.size(); }
  Eigen::Index rows() const { return values.empty() ? 0 : values[0].rows(); }
  Eigen::Index cols() const { return values.empty() ? 0 : values[0].cols(); }

  void validate() const {
    if (!reference) throw std::invalid_argument("ControlledPath: null reference");
    if (values.size() != reference->grid().size())
      throw std::invalid_argument("ControlledPath: grid mismatch");
    if (derivs.size() != values.size())
      throw std::invalid_argument("ControlledPath: derivative grid mismatch");
    const Eigen::Index r = rows(), c = cols(), e = reference->dim();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].rows() != r || values[i].cols() != c ||
          derivs[i].rows() != r * c || derivs[i].cols() != e)
        throw std::invalid_argument("ControlledPath: inconsistent shapes");
    }
  }
};

// (c, 0): constant controlled path.
inline ControlledPath constant_controlled(RoughPathPtr ref, const MatrixXd& value) {
  ControlledPath y;
  y.reference = std::move(ref);
  const std::size_t n = y.reference->grid().size();
  y.values.assign(n, value);
  y.derivs.assign(n, MatrixXd::Zero(value.rows() * value.cols(), y.reference->dim()));
  return y;
}

// The reference path itself as a controlled path (W, I): values are the path
// values as dim x 1 columns, derivative the identity.
inline ControlledPath identity_controlled(RoughPathPtr ref) {
  ControlledPath y;
  y.reference = ref;
  const std::size_t n = ref->grid().size();
  const int e = ref->dim();
  y.values.resize(n);
  y.derivs.assign(n, MatrixXd::Identity(e, e));
  for (std::size_t i = 0; i < n; ++i) y.values[i] = ref->value(i);
  return y;
}

struct ConvergenceReport {
  std::vector<int> coarsen_factors;   // 1, 2, 4, ...
  std::vector<double> meshes;         // max step at each factor
  std::vector<VectorXd> sums;         // compensated sum per factor
  std::vector<double> diffs;          // |sum_k - sum_{k-1}|, k >= 1
  double fitted_order = 0.0;          // slope of log2(diff) against level
};

namespace detail {

// Compensated sum over [i0, i1] with stride `factor` (last block may be short):
//   sum_u  Y_u W_{u,v} + Y'_u : A_{u,v}
inline VectorXd compensated_sum(const ControlledPath& y, std::size_t i0,
                                std::size_t i1, std::size_t factor) {
  const auto& path = *y.reference;
  const int e = path.dim();
  const Eigen::Index n = y.rows();
  if (y.cols() != e)
    throw std::invalid_argument("rough_integral: integrand cols must equal driver dim");
  VectorXd acc = VectorXd::Zero(n);
  for (std::size_t u = i0; u < i1;) {
    const std::size_t v = std::min(u + factor, i1);
    const VectorXd w = path.increment(u, v);
    const MatrixXd a = path.area(u, v);
    acc.noalias() += y.values[u] * w;
    const MatrixXd& d = y.derivs[u];
    for (Eigen::Index i = 0; i < n; ++i) {
      double second = 0.0;
      for (int k = 0; k < e; ++k)
        for (int j = 0; j < e; ++j) second += d(i * e + k, j) * a(j, k);
      acc[i] += second;
    }
    u = v;
  }
  return acc;
}

}  // namespace detail

// Rough integral of Y against its reference over the grid window [i0, i1].
// The full-resolution compensated sum is returned as the value; coarsened
// sums certify convergence (differences should decay like mesh^(3 alpha - 1)).
inline std::pair<VectorXd, ConvergenceReport> rough_integral(
    const ControlledPath& y, std::size_t i0, std::size_t i1) {
  y.validate();
  if (i1 <= i0 || i1 >= y.points())
    throw std::invalid_argument("rough_integral: invalid grid window");
  ConvergenceReport rep;
  const auto& grid = y.reference->grid();
  std::size_t factor = 1;
  while (i1 - i0 >= factor) {
    rep.coarsen_factors.push_back(static_cast<int>(factor));
    double mesh = 0.0;
    for (std::size_t u = i0; u < i1; u += factor)
      mesh = std::max(mesh, grid[std::min(u + factor, i1)] - grid[u]);
    rep.meshes.push_back(mesh);
    rep.sums.push_back(detail::compensated_sum(y, i0, i1, factor));
    factor *= 2;
    if (rep.coarsen_factors.size() >= 12) break;
  }
  for (std::size_t k = 1; k < rep.sums.size(); ++k)
    rep.diffs.push_back((rep.sums[k] - rep.sums[0]).norm());
  // least-squares slope of log2(diff) against level index
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < rep.diffs.size(); ++k) {
    if (rep.diffs[k] > 0.0) {
      xs.push_back(static_cast<double>(k + 1));
      ys.push_back(std::log2(rep.diffs[k]));
    }
  }
  if (xs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sx += xs[k];
      sy += ys[k];
      sxx += xs[k] * xs[k];
      sxy += xs[k] * ys[k];
    }
    const double m = static_cast<double>(xs.size());
    rep.fitted_order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return {rep.sums[0], rep};
}

inline std::pair<VectorXd, ConvergenceReport> rough_integral(const ControlledPath& y) {
  return rough_integral(y, 0, y.points() - 1);
}

// Leibniz product (A B, A' B + A B').
inline ControlledPath product(const ControlledPath& a, const ControlledPath& b) {
  a.validate();
  b.validate();
  if (a.reference != b.reference)
    throw std::invalid_argument("product: controlled paths must share a reference");
  if (a.cols() != b.rows())
    throw std::invalid_argument("product: shape mismatch");
  const Eigen::Index n = a.rows(), p = a.cols(), q = b.cols();
  const int e = a.reference->dim();
  ControlledPath out;
  out.reference = a.reference;
  const std::size_t pts = a.points();
  out.values.resize(pts);
  out.derivs.resize(pts);
  for (std::size_t t = 0; t < pts; ++t) {
    out.values[t] = a.values[t] * b.values[t];
    MatrixXd d = MatrixXd::Zero(n * q, e);
    for (int j = 0; j < e; ++j) {
      // reshape derivative columns to matrices, apply the product rule
      MatrixXd da(n, p), db(p, q);
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < p; ++c) da(r, c) = a.derivs[t](r * p + c, j);
      for (Eigen::Index r = 0; r < p; ++r)
        for (Eigen::Index c = 0; c < q; ++c) db(r, c) = b.derivs[t](r * q + c, j);
      const MatrixXd dj = da * b.values[t] + a.values[t] * db;
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < q; ++c) d(r * q + c, j) = dj(r, c);
    }
    out.derivs[t] = std::move(d);
  }
  return out;
}

// A smooth map acting on controlled values: apply() evaluates phi, dapply()
// evaluates the directional derivative D phi(y)[dir].
struct SmoothMap {
  std::function<MatrixXd(const MatrixXd&)> apply;
  std::function<MatrixXd(const MatrixXd&, const MatrixXd&)> dapply;
};

inline SmoothMap scalar_map(std::function<double(double)> f,
                            std::function<double(double)> df) {
  SmoothMap m;
  m.apply = [f](const MatrixXd& y) {
    return MatrixXd::Constant(1, 1, f(y(0, 0)));
  };
  m.dapply = [df](const MatrixXd& y, const MatrixXd& dir) {
    return MatrixXd::Constant(1, 1, df(y(0, 0)) * dir(0, 0));
  };
  return m;
}

// Composition (phi(Y), D phi(Y) Y').
inline ControlledPath compose_smooth(const SmoothMap& phi, const ControlledPath& y) {
  y.validate();
  const int e = y.reference->dim();
  ControlledPath out;
  out.reference = y.reference;
  const std::size_t pts = y.points();
  out.values.resize(pts);
  out.derivs.resize(pts);
  const Eigen::Index p = y.cols();
  for (std::size_t t = 0; t < pts; ++t) {
    out.values[t] = phi.apply(y.values[t]);
    const Eigen::Index nr = out.values[t].rows(), nc = out.values[t].cols();
    MatrixXd d(nr * nc, e);
    for (int j = 0; j < e; ++j) {
      MatrixXd dir(y.rows(), p);
      for (Eigen::Index r = 0; r < y.rows(); ++r)
        for (Eigen::Index c = 0; c < p; ++c) dir(r, c) = y.derivs[t](r * p + c, j);
      const MatrixXd dj = phi.dapply(y.values[t], dir);
      for (Eigen::Index r = 0; r < nr; ++r)
        for (Eigen::Index c = 0; c < nc; ++c) d(r * nc + c, j) = dj(r, c);
    }
    out.derivs[t] = std::move(d);
  }
  return out;
}

// (Y_{T-.}, Y'_{T-.}) controlled by the time-reversed reference.
inline ControlledPath time_reverse(const ControlledPath& y) {
  y.validate();
  ControlledPath out;
  out.reference = std::make_shared<GeometricRoughPath>(y.reference->time_reversed());
  const std::size_t pts = y.points();
  out.values.resize(pts);
  out.derivs.resize(pts);
  for (std::size_t t = 0; t < pts; ++t) {
    out.values[t] = y.values[pts - 1 - t];
    out.derivs[t] = y.derivs[pts - 1 - t];
  }
  return out;
}

struct ControlledNorm {
  double deriv_holder = 0.0;      // ||Y'||_alpha
  double remainder_holder = 0.0;  // ||R^Y||_{2 alpha}
  double seminorm() const { return deriv_holder + remainder_holder; }
};

// Grid estimate of the controlled seminorm on [0,T]; `max_lag` = 0 uses all
// grid pairs.
inline ControlledNorm controlled_norm(const ControlledPath& y, std::size_t max_lag = 0) {
  y.validate();
  const auto& path = *y.reference;
  const auto& grid = path.grid();
  const double alpha = path.alpha();
  const std::size_t n = y.points();
  const Eigen::Index rows = y.rows(), cols = y.cols();
  if (max_lag == 0) max_lag = n;
  ControlledNorm out;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t jmax = std::min(n, i + max_lag + 1);
    for (std::size_t j = i + 1; j < jmax; ++j) {
      const double dt = grid[j] - grid[i];
      const double dd = (y.derivs[j] - y.derivs[i]).norm();
      out.deriv_holder = std::max(out.deriv_holder, dd / std::pow(dt, alpha));
      const VectorXd w = path.increment(i, j);
      MatrixXd rem = y.values[j] - y.values[i];
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
          rem(r, c) -= y.derivs[i].row(r * cols + c).dot(w);
      out.remainder_holder =
          std::max(out.remainder_holder, rem.norm() / std::pow(dt, 2.0 * alpha));
    }
  }
  return out;
}

}  // namespace rpde
