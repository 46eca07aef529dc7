#pragma once

// Joint lift Z = (B, W) of a Brownian motion with a deterministic rough path.
// Second level in the convention A^{jk} = int Z^j dZ^k:
//
//   [  B^Ito          int B (x) dW ]
//   [  int W (x) dB   W-areas      ]
//
// The B-block is an Ito (left-point) area; int B (x) dW is a left-point sum
// against the piecewise-linear interpolant of W on a subgrid; int W (x) dB is
// fixed by integration by parts, which therefore holds exactly.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "rpde/rng.hpp"
#include "rpde/rough_path.hpp"

namespace rpde {

class JointLift {
 public:
  JointLift() = default;

  JointLift(RoughPathPtr w, int dim_brownian, std::vector<VectorXd> step_incs,
            std::vector<MatrixXd> step_areas)
      : w_(std::move(w)), m_(dim_brownian) {
    const std::size_t n = w_->grid().steps();
    if (step_incs.size() != n || step_areas.size() != n)
      throw std::invalid_argument("JointLift: step data does not match grid");
    prefix_z_.resize(n + 1);
    prefix_a_.resize(n + 1);
    const int dim = m_ + w_->dim();
    prefix_z_[0] = VectorXd::Zero(dim);
    prefix_a_[0] = MatrixXd::Zero(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
      prefix_z_[k + 1] = prefix_z_[k] + step_incs[k];
      prefix_a_[k + 1] =
          prefix_a_[k] + step_areas[k] + prefix_z_[k] * step_incs[k].transpose();
    }
  }

  const TimeGrid& grid() const { return w_->grid(); }
  int dim() const { return m_ + w_->dim(); }
  int dim_brownian() const { return m_; }
  int dim_rough() const { return w_->dim(); }
  double alpha() const { return w_->alpha(); }
  const RoughPathPtr& base() const { return w_; }

  VectorXd increment(std::size_t i, std::size_t j) const {
    return prefix_z_[j] - prefix_z_[i];
  }
  MatrixXd area(std::size_t i, std::size_t j) const {
    return prefix_a_[j] - prefix_a_[i] -
           prefix_z_[i] * (prefix_z_[j] - prefix_z_[i]).transpose();
  }
  VectorXd step_increment(std::size_t k) const { return increment(k, k + 1); }
  MatrixXd step_area(std::size_t k) const { return area(k, k + 1); }

  // Residual of the cross-block integration-by-parts identity over (i, j).
  double ibp_defect(std::size_t i, std::size_t j) const {
    const VectorXd z = increment(i, j);
    const MatrixXd a = area(i, j);
    const int e = dim_rough();
    const MatrixXd bw = a.block(0, m_, m_, e);           // int B (x) dW
    const MatrixXd wb = a.block(m_, 0, e, m_);           // int W (x) dB
    const VectorXd db = z.head(m_), dw = z.tail(e);
    return (wb + bw.transpose() - dw * db.transpose()).norm();
  }

 private:
  RoughPathPtr w_;
  int m_ = 0;
  std::vector<VectorXd> prefix_z_;
  std::vector<MatrixXd> prefix_a_;
};

// Fills the per-step blocks for one Brownian realization. `refine` is the
// subgrid factor used for the Ito areas and the cross integral against the
// piecewise-linear interpolant of W.
template <typename Rng>
JointLift build_joint_lift(RoughPathPtr w, Rng rng, int dim_brownian,
                           int refine = 16) {
  if (dim_brownian < 1)
    throw std::invalid_argument("build_joint_lift: need at least one Brownian dim");
  if (refine < 1) throw std::invalid_argument("build_joint_lift: refine must be >= 1");
  const int m = dim_brownian, e = w->dim();
  const int dim = m + e;
  const std::size_t n = w->grid().steps();
  std::vector<VectorXd> incs(n);
  std::vector<MatrixXd> areas(n);
  VectorXd sub(m), pre(m), isum(m);
  for (std::size_t k = 0; k < n; ++k) {
    const double sd = std::sqrt(w->grid().dt(k) / refine);
    pre.setZero();
    isum.setZero();
    MatrixXd ito = MatrixXd::Zero(m, m);
    for (int s = 0; s < refine; ++s) {
      for (int c = 0; c < m; ++c) sub[c] = sd * rng.gaussian();
      ito.noalias() += pre * sub.transpose();
      isum += pre;  // left-point values for the cross integral
      pre += sub;
    }
    const VectorXd db = pre;
    const VectorXd dw = w->step_increment(k);
    const MatrixXd bw = (isum / refine) * dw.transpose();     // int B (x) dW
    const MatrixXd wb = dw * db.transpose() - bw.transpose();  // by parts

    VectorXd z(dim);
    z.head(m) = db;
    z.tail(e) = dw;
    MatrixXd a = MatrixXd::Zero(dim, dim);
    a.topLeftCorner(m, m) = ito;
    a.topRightCorner(m, e) = bw;
    a.bottomLeftCorner(e, m) = wb;
    a.bottomRightCorner(e, e) = w->step_area(k);
    incs[k] = std::move(z);
    areas[k] = std::move(a);
  }
  return JointLift(std::move(w), m, std::move(incs), std::move(areas));
}

}  // namespace rpde
