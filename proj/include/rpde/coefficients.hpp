#pragma once

// Coefficient fields of the operators
//   L u     = 1/2 Tr(sigma sigma^T D^2 u) + <b, Du> + c u
//   Gamma_k = <beta_k, Du> + gamma_k u
// and their formal adjoints
//   a~ = sigma sigma^T,  b~_i = d_j a_{ji} - b_i,
//   c~ = 1/2 d_ij a_{ij} - div b + c,
//   beta~_k = -beta_k,   gamma~_k = -div beta_k + gamma_k.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rpde/vector_field.hpp"

namespace rpde {

struct ScalarField {
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> grad;  // optional
  std::function<MatrixXd(const VectorXd&)> hess;  // optional

  bool empty() const { return !static_cast<bool>(value); }
  double operator()(const VectorXd& x) const { return value ? value(x) : 0.0; }
};

inline ScalarField zero_scalar(int dim) {
  ScalarField f;
  f.value = [](const VectorXd&) { return 0.0; };
  f.grad = [dim](const VectorXd&) { return VectorXd::Zero(dim); };
  f.hess = [dim](const VectorXd&) { return MatrixXd::Zero(dim, dim); };
  return f;
}

inline ScalarField constant_scalar(double v, int dim) {
  ScalarField f = zero_scalar(dim);
  f.value = [v](const VectorXd&) { return v; };
  return f;
}

// kappa * cos(<k, x> + phase): bounded with all derivatives bounded.
inline ScalarField cosine_scalar(double kappa, const VectorXd& k, double phase = 0.0) {
  ScalarField f;
  f.value = [kappa, k, phase](const VectorXd& x) {
    return kappa * std::cos(k.dot(x) + phase);
  };
  f.grad = [kappa, k, phase](const VectorXd& x) -> VectorXd {
    return -kappa * std::sin(k.dot(x) + phase) * k;
  };
  f.hess = [kappa, k, phase](const VectorXd& x) -> MatrixXd {
    return -kappa * std::cos(k.dot(x) + phase) * (k * k.transpose());
  };
  return f;
}

struct OperatorCoefficients {
  int dim_state = 0;     // d
  int dim_brownian = 0;  // m (columns of sigma)
  int dim_driver = 0;    // e (rough-path components)
  std::vector<VectorFieldFn> sigma;  // m columns, each R^d -> R^d
  VectorFieldFn b;                   // drift, optional
  ScalarField c;                     // zero-order term, optional
  std::vector<VectorFieldFn> beta;   // e columns
  std::vector<ScalarField> gamma;    // e scalar fields
  int smoothness_sigma = 3, smoothness_b = 1, smoothness_c = 1;
  int smoothness_beta = 3, smoothness_gamma = 2;

  void validate() const {
    if (dim_state < 1 || dim_brownian < 1 || dim_driver < 1)
      throw std::invalid_argument("OperatorCoefficients: bad dimensions");
    if (static_cast<int>(sigma.size()) != dim_brownian ||
        static_cast<int>(beta.size()) != dim_driver)
      throw std::invalid_argument("OperatorCoefficients: field counts mismatch");
    for (const auto& f : sigma)
      if (!f.value) throw std::invalid_argument("OperatorCoefficients: sigma missing");
    for (const auto& f : beta)
      if (!f.value) throw std::invalid_argument("OperatorCoefficients: beta missing");
  }

  bool has_drift() const { return static_cast<bool>(b.value); }
  double c_value(const VectorXd& x) const { return c.empty() ? 0.0 : c.value(x); }
  double gamma_value(int k, const VectorXd& x) const {
    return gamma.empty() || gamma[k].empty() ? 0.0 : gamma[k].value(x);
  }

  // Hybrid field set (sigma columns then beta columns) for the joint lift.
  VectorFieldSet hybrid() const {
    VectorFieldSet set;
    set.dim_state = dim_state;
    set.dim_driver = dim_brownian + dim_driver;
    set.fields = sigma;
    for (const auto& f : beta) set.fields.push_back(f);
    set.drift = b;
    set.smoothness = std::min(smoothness_sigma, smoothness_beta);
    return set;
  }
};

namespace detail {

inline VectorXd grad_div(const VectorFieldFn& f, const VectorXd& x) {
  const auto h = f.hess(x);
  VectorXd g = VectorXd::Zero(x.size());
  for (int c = 0; c < x.size(); ++c)
    for (int r = 0; r < x.size(); ++r) g[c] += h[r](r, c);
  return g;
}

}  // namespace detail

// Adjoint coefficient set (L*, Gamma*): needs sigma derivatives to order 2,
// b and beta to order 1.
inline OperatorCoefficients adjoint_coefficients(const OperatorCoefficients& co) {
  co.validate();
  for (const auto& s : co.sigma)
    if (!s.jac || !s.hess)
      throw std::invalid_argument("adjoint_coefficients: sigma derivatives missing");
  for (const auto& f : co.beta)
    if (!f.jac)
      throw std::invalid_argument("adjoint_coefficients: beta derivatives missing");
  if (co.has_drift() && !co.b.jac)
    throw std::invalid_argument("adjoint_coefficients: drift jacobian missing");

  OperatorCoefficients adj;
  adj.dim_state = co.dim_state;
  adj.dim_brownian = co.dim_brownian;
  adj.dim_driver = co.dim_driver;
  adj.sigma = co.sigma;  // a~ = a keeps the diffusion columns
  adj.smoothness_sigma = co.smoothness_sigma;
  adj.smoothness_b = std::max(0, std::min(co.smoothness_sigma - 1, co.smoothness_b));
  adj.smoothness_c = std::max(0, std::min({co.smoothness_sigma - 2,
                                           co.smoothness_b - 1, co.smoothness_c}));
  adj.smoothness_beta = co.smoothness_beta;
  adj.smoothness_gamma =
      std::max(0, std::min(co.smoothness_beta - 1, co.smoothness_gamma));

  const int d = co.dim_state;
  const auto sigma = co.sigma;
  const auto b = co.b;
  const auto c = co.c;

  // b~ = sum_k [ (div sigma_k) sigma_k + (D sigma_k) sigma_k ] - b
  VectorFieldFn badj;
  badj.value = [sigma, b, d](const VectorXd& x) -> VectorXd {
    VectorXd out = VectorXd::Zero(d);
    for (const auto& s : sigma) {
      const VectorXd v = s.value(x);
      const MatrixXd j = s.jac(x);
      out += j.trace() * v + j * v;
    }
    if (b.value) out -= b.value(x);
    return out;
  };
  badj.jac = [sigma, b, d](const VectorXd& x) -> MatrixXd {
    MatrixXd out = MatrixXd::Zero(d, d);
    for (const auto& s : sigma) {
      const VectorXd v = s.value(x);
      const MatrixXd j = s.jac(x);
      const auto h = s.hess(x);
      const VectorXd gd = detail::grad_div(s, x);
      MatrixXd m(d, d);  // M(i,c) = sum_j H_i(j,c) v_j
      for (int r = 0; r < d; ++r) m.row(r) = (h[r] * v).transpose();
      out += v * gd.transpose() + j.trace() * j + m + j * j;
    }
    if (b.jac) out -= b.jac(x);
    return out;
  };

  // c~ = 1/2 d_ij a_ij - div b + c, with a = sum_k sigma_k sigma_k^T
  ScalarField cadj;
  cadj.value = [sigma, b, c, d](const VectorXd& x) -> double {
    double dd = 0.0;
    for (const auto& s : sigma) {
      const VectorXd v = s.value(x);
      const MatrixXd j = s.jac(x);
      const auto h = s.hess(x);
      const VectorXd gd = detail::grad_div(s, x);
      const double t1 = gd.dot(v);                  // sum_ij H_i(i,j) v_j
      const double t2 = (j * j).trace();            // sum_ij J(i,j) J(j,i)
      const double t3 = j.trace() * j.trace();      // (div v)^2
      double t4 = 0.0;                              // sum_ij v_i H_j(i,j)
      for (int jj = 0; jj < d; ++jj) t4 += v.dot(h[jj].col(jj));
      dd += t1 + t2 + t3 + t4;
    }
    double out = 0.5 * dd;
    if (b.jac) out -= b.jac(x).trace();
    if (c.value) out += c.value(x);
    return out;
  };

  adj.b = badj;
  adj.c = cadj;

  // beta~ = -beta, gamma~_k = -div beta_k + gamma_k
  for (int k = 0; k < co.dim_driver; ++k) {
    const auto bk = co.beta[k];
    VectorFieldFn nb;
    nb.value = [bk](const VectorXd& x) -> VectorXd { return -bk.value(x); };
    nb.jac = [bk](const VectorXd& x) -> MatrixXd { return -bk.jac(x); };
    if (bk.hess)
      nb.hess = [bk](const VectorXd& x) {
        auto h = bk.hess(x);
        for (auto& m : h) m = -m;
        return h;
      };
    adj.beta.push_back(nb);

    const ScalarField gk = co.gamma.empty() ? ScalarField{} : co.gamma[k];
    ScalarField ng;
    ng.value = [bk, gk](const VectorXd& x) -> double {
      double out = -bk.jac(x).trace();
      if (gk.value) out += gk.value(x);
      return out;
    };
    if (bk.hess) {
      ng.grad = [bk, gk](const VectorXd& x) -> VectorXd {
        VectorXd out = -detail::grad_div(bk, x);
        if (gk.grad) out += gk.grad(x);
        return out;
      };
    }
    adj.gamma.push_back(ng);
  }
  return adj;
}

// L f evaluated pointwise; f must provide grad and hess.
inline std::function<double(const VectorXd&)> apply_generator(
    const OperatorCoefficients& co, const ScalarField& f) {
  if (!f.grad || !f.hess)
    throw std::invalid_argument("apply_generator: f needs grad and hess");
  return [co, f](const VectorXd& x) -> double {
    const VectorXd g = f.grad(x);
    const MatrixXd h = f.hess(x);
    double out = 0.0;
    for (const auto& s : co.sigma) {
      const VectorXd v = s.value(x);
      out += 0.5 * v.dot(h * v);
    }
    if (co.b.value) out += co.b.value(x).dot(g);
    if (co.c.value) out += co.c.value(x) * f.value(x);
    return out;
  };
}

// Gamma_k f = <beta_k, Df> + gamma_k f as a scalar field; the gradient is
// assembled when the ingredients carry one more derivative.
inline ScalarField apply_gamma(const OperatorCoefficients& co, int k,
                               const ScalarField& f) {
  if (!f.grad) throw std::invalid_argument("apply_gamma: f needs grad");
  const auto bk = co.beta.at(k);
  const ScalarField gk = co.gamma.empty() ? ScalarField{} : co.gamma.at(k);
  ScalarField out;
  out.value = [bk, gk, f](const VectorXd& x) -> double {
    double v = bk.value(x).dot(f.grad(x));
    if (gk.value) v += gk.value(x) * f.value(x);
    return v;
  };
  if (f.hess && bk.jac) {
    out.grad = [bk, gk, f](const VectorXd& x) -> VectorXd {
      VectorXd g = bk.jac(x).transpose() * f.grad(x) + f.hess(x) * bk.value(x);
      if (gk.value && gk.grad)
        g += gk.value(x) * f.grad(x) + f.value(x) * gk.grad(x);
      return g;
    };
  }
  return out;
}

}  // namespace rpde
