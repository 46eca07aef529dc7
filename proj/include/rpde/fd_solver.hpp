#pragma once

// Finite-difference oracle for the smooth-driver equations
//   -d_t u = L u + Gamma_k u dW^k/dt   (backward, terminal datum g)
//    d_t p = L* p + Gamma*_k p dW^k/dt (forward, initial datum p0)
// with implicit-in-diffusion / explicit-in-transport operator splitting.
// The solver only ever sees C^1 drivers; it is a test oracle, not a rough
// PDE scheme. Dimensions 1 and 2 are supported.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpde/coefficients.hpp"
#include "rpde/grid.hpp"
#include "rpde/smooth_driver.hpp"

namespace rpde {

enum class FdBoundary { ZeroDirichlet, Extrapolate };

struct FdField {
  TimeGrid tgrid;
  SpaceGrid space;
  std::vector<std::vector<double>> values;  // [time][flattened point]

  std::size_t flat_index(std::size_t ix, std::size_t iy = 0) const {
    return space.dim() == 1 ? ix : ix * space.points_per_axis() + iy;
  }

  VectorXd point(std::size_t flat) const {
    VectorXd x(space.dim());
    if (space.dim() == 1) {
      x[0] = space.coord(flat);
    } else {
      const std::size_t m = space.points_per_axis();
      x[0] = space.coord(flat / m);
      x[1] = space.coord(flat % m);
    }
    return x;
  }

  // Multilinear interpolation in space at time index `ti`; clamps to the box.
  double interpolate(std::size_t ti, const VectorXd& x) const {
    const double h = space.mesh();
    const double l = space.half_width();
    const std::size_t m = space.points_per_axis();
    auto locate = [&](double c) {
      double u = (std::min(std::max(c, -l), l) + l) / h;
      std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), m - 2);
      return std::pair<std::size_t, double>(i, u - static_cast<double>(i));
    };
    if (space.dim() == 1) {
      const auto [i, f] = locate(x[0]);
      return (1 - f) * values[ti][i] + f * values[ti][i + 1];
    }
    const auto [i, fx] = locate(x[0]);
    const auto [j, fy] = locate(x[1]);
    const auto& v = values[ti];
    return (1 - fx) * ((1 - fy) * v[i * m + j] + fy * v[i * m + j + 1]) +
           fx * ((1 - fy) * v[(i + 1) * m + j] + fy * v[(i + 1) * m + j + 1]);
  }
};

namespace detail {

// Thomas solve of (I - r_j d^2) u = rhs with the requested boundary rows.
inline void tridiagonal_diffusion_solve(const std::vector<double>& r,
                                        std::vector<double>& u, FdBoundary bc,
                                        std::vector<double>& lo, std::vector<double>& di,
                                        std::vector<double>& up) {
  const std::size_t m = u.size();
  lo.assign(m, 0.0);
  di.assign(m, 1.0);
  up.assign(m, 0.0);
  for (std::size_t j = 1; j + 1 < m; ++j) {
    lo[j] = -r[j];
    di[j] = 1.0 + 2.0 * r[j];
    up[j] = -r[j];
  }
  if (bc == FdBoundary::ZeroDirichlet) {
    u.front() = 0.0;
    u.back() = 0.0;
  } else {
    // u'' = 0 at the edges: u_0 - 2 u_1 + u_2 = 0 eliminated into row 0
    di[0] = 1.0;
    up[0] = 0.0;
    lo[m - 1] = 0.0;
    di[m - 1] = 1.0;
    // retain explicit edge value; extrapolation handled by the stencil below
  }
  // forward elimination
  for (std::size_t j = 1; j < m; ++j) {
    const double w = lo[j] / di[j - 1];
    di[j] -= w * up[j - 1];
    u[j] -= w * u[j - 1];
  }
  u[m - 1] /= di[m - 1];
  for (std::size_t j = m - 1; j-- > 0;) u[j] = (u[j] - up[j] * u[j + 1]) / di[j];
}

struct CoefficientTables {
  // per flattened point
  std::vector<MatrixXd> a;               // sigma sigma^T
  std::vector<VectorXd> b;
  std::vector<double> c;
  std::vector<std::vector<VectorXd>> beta;   // [k][point]
  std::vector<std::vector<double>> gamma;    // [k][point]
};

inline CoefficientTables tabulate(const OperatorCoefficients& co, const FdField& f) {
  CoefficientTables t;
  const std::size_t n = f.values.empty() ? f.space.total_points() : f.values[0].size();
  t.a.resize(n);
  t.b.resize(n);
  t.c.resize(n);
  t.beta.assign(co.dim_driver, std::vector<VectorXd>(n));
  t.gamma.assign(co.dim_driver, std::vector<double>(n));
  for (std::size_t p = 0; p < n; ++p) {
    const VectorXd x = f.point(p);
    MatrixXd a = MatrixXd::Zero(co.dim_state, co.dim_state);
    for (const auto& s : co.sigma) {
      const VectorXd v = s.value(x);
      a += v * v.transpose();
    }
    t.a[p] = a;
    t.b[p] = co.has_drift() ? co.b.value(x) : VectorXd::Zero(co.dim_state);
    t.c[p] = co.c_value(x);
    for (int k = 0; k < co.dim_driver; ++k) {
      t.beta[k][p] = co.beta[k].value(x);
      t.gamma[k][p] = co.gamma_value(k, x);
    }
  }
  return t;
}

}  // namespace detail

struct FdParams {
  SpaceGrid space;
  std::size_t time_steps = 256;
  FdBoundary boundary = FdBoundary::ZeroDirichlet;
};

// Shared stepper: evolves `field` from slice `src` to slice `dst` over the
// time interval of length dt with driver increment dwk (per component).
namespace detail {

inline void fd_step(const CoefficientTables& tab, const FdField& geom,
                    const std::vector<double>& src, std::vector<double>& dst,
                    double dt, const VectorXd& dw, FdBoundary bc,
                    std::vector<double>& scratch_lo, std::vector<double>& scratch_di,
                    std::vector<double>& scratch_up, std::vector<double>& sweep) {
  const int dim = geom.space.dim();
  const std::size_t m = geom.space.points_per_axis();
  const double h = geom.space.mesh();
  const std::size_t n = src.size();
  dst.resize(n);

  auto central = [&](const std::vector<double>& u, std::size_t p, int axis) {
    if (dim == 1) {
      if (p == 0) return (u[1] - u[0]) / h;
      if (p + 1 == n) return (u[n - 1] - u[n - 2]) / h;
      return (u[p + 1] - u[p - 1]) / (2 * h);
    }
    const std::size_t ix = p / m, iy = p % m;
    if (axis == 0) {
      if (ix == 0) return (u[p + m] - u[p]) / h;
      if (ix + 1 == m) return (u[p] - u[p - m]) / h;
      return (u[p + m] - u[p - m]) / (2 * h);
    }
    if (iy == 0) return (u[p + 1] - u[p]) / h;
    if (iy + 1 == m) return (u[p] - u[p - 1]) / h;
    return (u[p + 1] - u[p - 1]) / (2 * h);
  };

  // explicit transport + zero order + (2d) diffusion cross term
  for (std::size_t p = 0; p < n; ++p) {
    double val = src[p];
    double zero_order = tab.c[p] * dt;
    VectorXd grad(dim);
    for (int ax = 0; ax < dim; ++ax) grad[ax] = central(src, p, ax);
    val += dt * tab.b[p].dot(grad);
    for (std::size_t k = 0; k < tab.beta.size(); ++k) {
      val += dw[k] * tab.beta[k][p].dot(grad);
      zero_order += dw[k] * tab.gamma[k][p];
    }
    if (dim == 2) {
      const std::size_t ix = p / m, iy = p % m;
      if (ix > 0 && ix + 1 < m && iy > 0 && iy + 1 < m) {
        const double cross = (src[p + m + 1] - src[p + m - 1] - src[p - m + 1] +
                              src[p - m - 1]) /
                             (4 * h * h);
        val += dt * tab.a[p](0, 1) * cross;
      }
    }
    dst[p] = val + zero_order * src[p];
  }

  // implicit diffusion sweeps (one per axis)
  if (dim == 1) {
    std::vector<double> r(n);
    for (std::size_t p = 0; p < n; ++p) r[p] = 0.5 * dt * tab.a[p](0, 0) / (h * h);
    tridiagonal_diffusion_solve(r, dst, bc, scratch_lo, scratch_di, scratch_up);
  } else {
    std::vector<double> r(m);
    // x-direction: for each fixed iy solve along ix
    for (std::size_t iy = 0; iy < m; ++iy) {
      sweep.resize(m);
      for (std::size_t ix = 0; ix < m; ++ix) {
        sweep[ix] = dst[ix * m + iy];
        r[ix] = 0.5 * dt * tab.a[ix * m + iy](0, 0) / (h * h);
      }
      tridiagonal_diffusion_solve(r, sweep, bc, scratch_lo, scratch_di, scratch_up);
      for (std::size_t ix = 0; ix < m; ++ix) dst[ix * m + iy] = sweep[ix];
    }
    // y-direction
    for (std::size_t ix = 0; ix < m; ++ix) {
      sweep.resize(m);
      for (std::size_t iy = 0; iy < m; ++iy) {
        sweep[iy] = dst[ix * m + iy];
        r[iy] = 0.5 * dt * tab.a[ix * m + iy](1, 1) / (h * h);
      }
      tridiagonal_diffusion_solve(r, sweep, bc, scratch_lo, scratch_di, scratch_up);
      for (std::size_t iy = 0; iy < m; ++iy) dst[ix * m + iy] = sweep[iy];
    }
  }

  if (bc == FdBoundary::ZeroDirichlet) {
    if (dim == 1) {
      dst.front() = 0.0;
      dst.back() = 0.0;
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        dst[i] = 0.0;
        dst[(m - 1) * m + i] = 0.0;
        dst[i * m] = 0.0;
        dst[i * m + m - 1] = 0.0;
      }
    }
  }
}

inline void check_cfl(const CoefficientTables& tab, const SmoothDriver& driver,
                      const TimeGrid& tgrid, double h) {
  double worst = 0.0;
  for (std::size_t kstep = 0; kstep < tgrid.steps(); ++kstep) {
    const double dt = tgrid.dt(kstep);
    // driver increment over this fd step
    const std::size_t i0 = 0, i1 = 0;
    (void)i0;
    (void)i1;
    double bmax = 0.0, cmax = 0.0;
    for (std::size_t p = 0; p < tab.b.size(); ++p) {
      double transport = tab.b[p].lpNorm<1>() * dt;
      double zero = std::abs(tab.c[p]) * dt;
      for (std::size_t k = 0; k < tab.beta.size(); ++k) {
        const double dwk = std::abs(
            driver.values[std::min(driver.grid().size() - 1,
                                   driver.grid().index_of(tgrid[kstep + 1]))]
                [static_cast<int>(k)] -
            driver.values[driver.grid().index_of(tgrid[kstep])][static_cast<int>(k)]);
        transport += tab.beta[k][p].lpNorm<1>() * dwk;
        zero += std::abs(tab.gamma[k][p]) * dwk;
      }
      bmax = std::max(bmax, transport / h);
      cmax = std::max(cmax, zero);
    }
    worst = std::max(worst, std::max(bmax, cmax));
  }
  if (worst > 1.0) {
    const double suggested = tgrid.max_step() / (1.05 * worst);
    throw std::runtime_error(
        "fd solver: stability condition violated (CFL ratio " +
        std::to_string(worst) + "); reduce the time step to about " +
        std::to_string(suggested));
  }
}

}  // namespace detail

// Backward solve of -d_t u = L u + Gamma_k u dW^k/dt with u(T) = g.
inline FdField fd_backward_solve(const OperatorCoefficients& co, const ScalarField& g,
                                 const SmoothDriver& driver, const FdParams& params) {
  co.validate();
  driver.validate();
  if (co.dim_state != params.space.dim())
    throw std::invalid_argument("fd_backward_solve: dimension mismatch");
  const double T = driver.grid.horizon();
  FdField out;
  out.tgrid = TimeGrid::uniform(T, params.time_steps);
  out.space = params.space;
  const std::size_t n = params.space.total_points();
  out.values.assign(out.tgrid.size(), std::vector<double>(n, 0.0));
  for (std::size_t p = 0; p < n; ++p)
    out.values[out.tgrid.size() - 1][p] = g.value(out.point(p));

  const auto tab = detail::tabulate(co, out);
  detail::check_cfl(tab, driver, out.tgrid, params.space.mesh());

  std::vector<double> lo, di, up, sweep;
  VectorXd dw(co.dim_driver);
  for (std::size_t nstep = out.tgrid.steps(); nstep-- > 0;) {
    const std::size_t a = driver.grid.index_of(out.tgrid[nstep]);
    const std::size_t b = driver.grid.index_of(out.tgrid[nstep + 1]);
    dw = driver.increment(a, b);
    detail::fd_step(tab, out, out.values[nstep + 1], out.values[nstep],
                    out.tgrid.dt(nstep), dw, params.boundary, lo, di, up, sweep);
  }
  return out;
}

// Forward solve of d_t p = L* p + Gamma*_k p dW^k/dt with p(0) = p0, through
// the adjoint coefficient set.
inline FdField fd_forward_solve(const OperatorCoefficients& co, const ScalarField& p0,
                                const SmoothDriver& driver, const FdParams& params) {
  const auto adj = adjoint_coefficients(co);
  adj.validate();
  driver.validate();
  if (co.dim_state != params.space.dim())
    throw std::invalid_argument("fd_forward_solve: dimension mismatch");
  const double T = driver.grid.horizon();
  FdField out;
  out.tgrid = TimeGrid::uniform(T, params.time_steps);
  out.space = params.space;
  const std::size_t n = params.space.total_points();
  out.values.assign(out.tgrid.size(), std::vector<double>(n, 0.0));
  for (std::size_t p = 0; p < n; ++p) out.values[0][p] = p0.value(out.point(p));

  const auto tab = detail::tabulate(adj, out);
  detail::check_cfl(tab, driver, out.tgrid, params.space.mesh());

  std::vector<double> lo, di, up, sweep;
  VectorXd dw(co.dim_driver);
  for (std::size_t nstep = 0; nstep < out.tgrid.steps(); ++nstep) {
    const std::size_t a = driver.grid.index_of(out.tgrid[nstep]);
    const std::size_t b = driver.grid.index_of(out.tgrid[nstep + 1]);
    dw = driver.increment(a, b);
    detail::fd_step(tab, out, out.values[nstep], out.values[nstep + 1],
                    out.tgrid.dt(nstep), dw, params.boundary, lo, di, up, sweep);
  }
  return out;
}

// Trapezoid integral of the field slice against the box (mass, pairings).
inline double fd_integrate(const FdField& f, std::size_t ti) {
  const double h = f.space.mesh();
  const std::size_t m = f.space.points_per_axis();
  double acc = 0.0;
  if (f.space.dim() == 1) {
    for (std::size_t p = 0; p < m; ++p) {
      const double wgt = (p == 0 || p + 1 == m) ? 0.5 : 1.0;
      acc += wgt * f.values[ti][p];
    }
    return acc * h;
  }
  for (std::size_t ix = 0; ix < m; ++ix)
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double wx = (ix == 0 || ix + 1 == m) ? 0.5 : 1.0;
      const double wy = (iy == 0 || iy + 1 == m) ? 0.5 : 1.0;
      acc += wx * wy * f.values[ti][ix * m + iy];
    }
  return acc * h * h;
}

}  // namespace rpde
