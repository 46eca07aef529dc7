#pragma once

// RDE solvers built on the second-order Davie step
//   X_{t+} = X + b(X) dt + V_j(X) W^j_{s,t} + DV_k V_j (X) A^{jk}_{s,t},
// plus flows with Jacobians (via the augmented system), inverse flows (via
// the time-reversed driver) and Liouville determinants.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpde/controlled.hpp"
#include "rpde/joint_lift.hpp"
#include "rpde/rough_path.hpp"
#include "rpde/vector_field.hpp"

namespace rpde {

struct StatePath {
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::vector<MatrixXd> jacobians;  // empty unless requested
};

namespace detail {

inline void check_finite(const VectorXd& x, std::size_t step) {
  if (!x.allFinite())
    throw std::runtime_error("rde: state became non-finite at step " +
                             std::to_string(step));
}

// One Davie step; `jac` updated alongside when non-null.
inline void davie_step(const VectorFieldSet& fields, const VectorXd& w,
                       const MatrixXd& a, double dt, VectorXd& x, MatrixXd* jac) {
  const int d = fields.dim_state;
  const int e = fields.dim_driver;
  MatrixXd vmat(d, e);
  std::vector<MatrixXd> jacs(e);
  for (int j = 0; j < e; ++j) {
    vmat.col(j) = fields.fields[j].value(x);
    jacs[j] = fields.fields[j].jac(x);
  }
  VectorXd dx = vmat * w;
  for (int k = 0; k < e; ++k) dx.noalias() += jacs[k] * (vmat * a.col(k));
  if (fields.has_drift()) dx += dt * fields.drift.value(x);

  if (jac) {
    MatrixXd dj = MatrixXd::Zero(d, d);
    for (int j = 0; j < e; ++j) dj.noalias() += w[j] * (jacs[j] * (*jac));
    for (int k = 0; k < e; ++k) {
      const auto hess = fields.fields[k].hess
                            ? fields.fields[k].hess(x)
                            : std::vector<MatrixXd>(d, MatrixXd::Zero(d, d));
      for (int j = 0; j < e; ++j) {
        const double ajk = a(j, k);
        if (ajk == 0.0) continue;
        MatrixXd d2v(d, d);  // D^2 V_k [V_j]
        for (int r = 0; r < d; ++r)
          d2v.row(r) = (hess[r] * vmat.col(j)).transpose();
        dj.noalias() += ajk * ((d2v + jacs[k] * jacs[j]) * (*jac));
      }
    }
    if (fields.has_drift() && fields.drift.jac)
      dj.noalias() += dt * (fields.drift.jac(x) * (*jac));
    *jac += dj;
  }
  x += dx;
}

}  // namespace detail

// Solve dX = b(X) dt + V(X) dDriver from x0 over the driver grid.
template <typename Driver>
StatePath solve_rde(const VectorFieldSet& fields, const Driver& driver,
                    const VectorXd& x0, bool with_jacobian = false) {
  fields.validate();
  if (fields.dim_driver != driver.dim())
    throw std::invalid_argument("solve_rde: driver dimension mismatch");
  if (x0.size() != fields.dim_state)
    throw std::invalid_argument("solve_rde: state dimension mismatch");

  const auto& grid = driver.grid();
  StatePath out;
  out.times = grid.times();
  out.states.reserve(grid.size());
  out.states.push_back(x0);
  MatrixXd jac;
  if (with_jacobian) {
    jac = MatrixXd::Identity(fields.dim_state, fields.dim_state);
    out.jacobians.reserve(grid.size());
    out.jacobians.push_back(jac);
  }
  VectorXd x = x0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    detail::davie_step(fields, driver.step_increment(k), driver.step_area(k),
                       grid.dt(k), x, with_jacobian ? &jac : nullptr);
    detail::check_finite(x, k);
    out.states.push_back(x);
    if (with_jacobian) out.jacobians.push_back(jac);
  }
  return out;
}

// Linear specialization V_i(z) = A_i z + b_i.
template <typename Driver>
StatePath solve_linear_rde(const std::vector<MatrixXd>& a,
                           const std::vector<VectorXd>& b, const Driver& driver,
                           const VectorXd& x0, bool with_jacobian = false) {
  return solve_rde(linear_vector_fields(a, b), driver, x0, with_jacobian);
}

// Forward flow, Jacobian, inverse flow and determinant sampled on a set of
// starting points. Index [k][i]: point k, grid time i.
struct FlowSample {
  std::vector<double> times;
  std::vector<VectorXd> points;
  std::vector<std::vector<VectorXd>> forward;   // Phi_{t0, t_i}(x_k)
  std::vector<std::vector<MatrixXd>> jacobian;  // D Phi_{t0, t_i}(x_k)
  std::vector<std::vector<VectorXd>> inverse;   // Psi^{-1}_{t_i, T}(x_k)
  std::vector<std::vector<double>> det;         // det D Phi_{t0, t_i}(x_k)
};

template <typename Driver>
FlowSample solve_flow(const VectorFieldSet& fields, const Driver& driver,
                      const std::vector<VectorXd>& points) {
  FlowSample out;
  out.times = driver.grid().times();
  out.points = points;
  const auto reversed = driver.time_reversed();
  const std::size_t n = driver.grid().size();
  for (const auto& x0 : points) {
    auto fwd = solve_rde(fields, driver, x0, /*with_jacobian=*/true);
    std::vector<double> dets(n);
    for (std::size_t i = 0; i < n; ++i) dets[i] = fwd.jacobians[i].determinant();
    // reversed solve started at x0 at (reversed) time 0 gives
    // Psi^{-1}_{T - s, T}(x0); remap s -> original grid index
    auto rev = solve_rde(fields, reversed, x0, /*with_jacobian=*/false);
    std::vector<VectorXd> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[i] = rev.states[n - 1 - i];
    out.forward.push_back(std::move(fwd.states));
    out.jacobian.push_back(std::move(fwd.jacobians));
    out.det.push_back(std::move(dets));
    out.inverse.push_back(std::move(inv));
  }
  return out;
}

struct DeterminantPath {
  std::vector<double> times;
  std::vector<double> det_direct;     // det of the augmented-system Jacobian
  std::vector<double> det_liouville;  // exp of the divergence integrals
};

// Liouville route: det D Phi_{0,t} = exp( int div V_k(X) dW^k + int div b(X) dr ),
// the rough integral taken as the compensated sum of the controlled integrand
// (div V(X), D(div V) V(X)); the dr part uses the trapezoid rule.
template <typename Driver>
DeterminantPath det_jacobian(const VectorFieldSet& fields, const Driver& driver,
                             const VectorXd& x0) {
  fields.validate();
  const auto path = solve_rde(fields, driver, x0, /*with_jacobian=*/true);
  const int d = fields.dim_state;
  const int e = fields.dim_driver;
  const auto& grid = driver.grid();

  DeterminantPath out;
  out.times = grid.times();
  out.det_direct.resize(grid.size());
  out.det_liouville.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.det_direct[i] = path.jacobians[i].determinant();
    if (out.det_direct[i] == 0.0)
      throw std::runtime_error("det_jacobian: singular Jacobian");
  }

  auto div_b = [&](const VectorXd& x) {
    return fields.has_drift() && fields.drift.jac ? fields.drift.jac(x).trace() : 0.0;
  };

  double logdet = 0.0;
  out.det_liouville[0] = 1.0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const VectorXd& x = path.states[k];
    const VectorXd w = driver.step_increment(k);
    const MatrixXd a = driver.step_area(k);
    MatrixXd vmat(d, e);
    for (int j = 0; j < e; ++j) vmat.col(j) = fields.fields[j].value(x);
    for (int j = 0; j < e; ++j) logdet += fields.fields[j].jac(x).trace() * w[j];
    for (int kk = 0; kk < e; ++kk) {
      if (!fields.fields[kk].hess) continue;
      const auto hess = fields.fields[kk].hess(x);
      // gradient of div V_k contracted with V_j
      VectorXd grad_div = VectorXd::Zero(d);
      for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r) grad_div[c] += hess[r](r, c);
      for (int j = 0; j < e; ++j) logdet += a(j, kk) * grad_div.dot(vmat.col(j));
    }
    logdet += 0.5 * grid.dt(k) * (div_b(x) + div_b(path.states[k + 1]));
    out.det_liouville[k + 1] = std::exp(logdet);
  }
  return out;
}

// Rough SDE dX = b dt + sigma dB + beta dW: Davie scheme against the joint
// lift with V = (sigma, beta).
inline StatePath solve_rough_sde(const VectorFieldSet& sigma_beta,
                                 const JointLift& lift, const VectorXd& x0,
                                 bool with_jacobian = false) {
  return solve_rde(sigma_beta, lift, x0, with_jacobian);
}

// Convenience assembly of (sigma, beta) coefficient columns into one field
// set matching the joint-lift component order (B first, then W).
inline VectorFieldSet hybrid_fields(std::vector<VectorFieldFn> sigma,
                                    std::vector<VectorFieldFn> beta,
                                    VectorFieldFn drift, int dim_state,
                                    int smoothness = 3) {
  VectorFieldSet set;
  set.dim_state = dim_state;
  set.dim_driver = static_cast<int>(sigma.size() + beta.size());
  set.fields = std::move(sigma);
  for (auto& f : beta) set.fields.push_back(std::move(f));
  set.drift = std::move(drift);
  set.smoothness = smoothness;
  return set;
}

}  // namespace rpde
