#pragma once

// Vector fields R^d -> R^d with analytic first and second derivative
// evaluators, plus the driver-indexed collections fed to the RDE solvers.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpde/rng.hpp"

namespace rpde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct VectorFieldFn {
  // value: x -> V(x); jac: x -> DV(x) with (r,c) = d V^r / d x_c;
  // hess: x -> per-component Hessians H[r](p,q) = d^2 V^r / d x_p d x_q.
  std::function<VectorXd(const VectorXd&)> value;
  std::function<MatrixXd(const VectorXd&)> jac;
  std::function<std::vector<MatrixXd>(const VectorXd&)> hess;
};

inline VectorFieldFn zero_field(int dim) {
  VectorFieldFn f;
  f.value = [dim](const VectorXd&) { return VectorXd::Zero(dim); };
  f.jac = [dim](const VectorXd&) { return MatrixXd::Zero(dim, dim); };
  f.hess = [dim](const VectorXd&) {
    return std::vector<MatrixXd>(dim, MatrixXd::Zero(dim, dim));
  };
  return f;
}

inline VectorFieldFn constant_field(const VectorXd& v) {
  const int dim = static_cast<int>(v.size());
  VectorFieldFn f = zero_field(dim);
  f.value = [v](const VectorXd&) { return v; };
  return f;
}

// V(x) = A x + b with exact derivatives.
inline VectorFieldFn linear_field(const MatrixXd& a, const VectorXd& b) {
  const int dim = static_cast<int>(a.rows());
  VectorFieldFn f;
  f.value = [a, b](const VectorXd& x) -> VectorXd { return a * x + b; };
  f.jac = [a](const VectorXd&) { return a; };
  f.hess = [dim](const VectorXd&) {
    return std::vector<MatrixXd>(dim, MatrixXd::Zero(dim, dim));
  };
  return f;
}

// Fields V_1..V_e for the driver components, optional drift.
struct VectorFieldSet {
  int dim_state = 0;
  int dim_driver = 0;
  std::vector<VectorFieldFn> fields;  // size dim_driver
  VectorFieldFn drift;                // may have null callables (no drift)
  int smoothness = 3;                 // C^n_b tag

  bool has_drift() const { return static_cast<bool>(drift.value); }

  void validate() const {
    if (dim_state < 1 || dim_driver < 1)
      throw std::invalid_argument("VectorFieldSet: bad dimensions");
    if (static_cast<int>(fields.size()) != dim_driver)
      throw std::invalid_argument("VectorFieldSet: field count != driver dim");
    for (const auto& f : fields)
      if (!f.value || !f.jac)
        throw std::invalid_argument("VectorFieldSet: missing evaluators");
  }
};

inline VectorFieldSet linear_vector_fields(const std::vector<MatrixXd>& a,
                                           const std::vector<VectorXd>& b) {
  if (a.empty() || a.size() != b.size())
    throw std::invalid_argument("linear_vector_fields: inconsistent coefficients");
  VectorFieldSet set;
  set.dim_state = static_cast<int>(a[0].rows());
  set.dim_driver = static_cast<int>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    set.fields.push_back(linear_field(a[i], b[i]));
  set.smoothness = 99;
  return set;
}

// Central-difference consistency of the analytic derivative evaluators at
// random points; returns the worst relative defect.
inline double derivative_consistency_defect(const VectorFieldFn& f, int dim,
                                            int points = 8, double step = 1e-5,
                                            std::uint64_t seed = 1) {
  RngStream rng(seed, 0);
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = rng.gaussian();
    const MatrixXd j = f.jac(x);
    for (int c = 0; c < dim; ++c) {
      VectorXd xp = x, xm = x;
      xp[c] += step;
      xm[c] -= step;
      const VectorXd fd = (f.value(xp) - f.value(xm)) / (2 * step);
      const double scale = std::max(1.0, j.col(c).norm());
      worst = std::max(worst, (fd - j.col(c)).norm() / scale);
    }
    if (f.hess) {
      const auto h = f.hess(x);
      for (int c = 0; c < dim; ++c) {
        VectorXd xp = x, xm = x;
        xp[c] += step;
        xm[c] -= step;
        const MatrixXd fd = (f.jac(xp) - f.jac(xm)) / (2 * step);
        for (int r = 0; r < dim; ++r) {
          const double scale = std::max(1.0, h[r].col(c).norm());
          worst = std::max(worst, (fd.row(r).transpose() - h[r].col(c)).norm() / scale);
        }
      }
    }
  }
  return worst;
}

}  // namespace rpde
