#pragma once

// C^1 drivers sampled on a fine grid, used by the finite-difference oracle
// solvers and as the smooth end of Wong-Zakai comparisons.

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rpde/grid.hpp"
#include "rpde/rough_path.hpp"

namespace rpde {

struct SmoothDriver {
  TimeGrid grid;
  std::vector<VectorXd> values;  // W(t_i)
  std::vector<VectorXd> dots;    // dW/dt(t_i); may be empty

  int dim() const { return values.empty() ? 0 : static_cast<int>(values[0].size()); }

  void validate() const {
    if (values.size() != grid.size())
      throw std::invalid_argument("SmoothDriver: samples do not match grid");
    if (!dots.empty() && dots.size() != values.size())
      throw std::invalid_argument("SmoothDriver: derivative samples mismatch");
  }

  VectorXd increment(std::size_t i, std::size_t j) const {
    return values[j] - values[i];
  }

  // Worst defect of the supplied derivative against difference quotients.
  double derivative_defect() const {
    if (dots.empty()) return 0.0;
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double dt = grid.dt(k);
      const VectorXd quot = (values[k + 1] - values[k]) / dt;
      const VectorXd mid = 0.5 * (dots[k] + dots[k + 1]);
      worst = std::max(worst, (quot - mid).norm());
    }
    return worst;
  }

  GeometricRoughPath canonical_lift(double alpha = 0.5) const {
    return lift_piecewise_linear(grid, values, alpha);
  }

  static SmoothDriver from_function(const TimeGrid& grid,
                                    std::function<VectorXd(double)> f,
                                    std::function<VectorXd(double)> fdot = nullptr) {
    SmoothDriver d;
    d.grid = grid;
    d.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) d.values[i] = f(grid[i]);
    if (fdot) {
      d.dots.resize(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) d.dots[i] = fdot(grid[i]);
    }
    return d;
  }

  // Piecewise-linear interpolation of coarse samples onto `fine`; the dyadic
  // approximations of the Wong-Zakai study are built this way.
  static SmoothDriver interpolate_samples(const TimeGrid& coarse,
                                          const std::vector<VectorXd>& samples,
                                          const TimeGrid& fine) {
    if (samples.size() != coarse.size())
      throw std::invalid_argument("interpolate_samples: sample count mismatch");
    SmoothDriver d;
    d.grid = fine;
    d.values.resize(fine.size());
    std::size_t seg = 0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const double t = fine[i];
      while (seg + 2 < coarse.size() && coarse[seg + 1] < t) ++seg;
      const double t0 = coarse[seg], t1 = coarse[seg + 1];
      const double f = std::min(1.0, std::max(0.0, (t - t0) / (t1 - t0)));
      d.values[i] = (1.0 - f) * samples[seg] + f * samples[seg + 1];
    }
    return d;
  }
};

}  // namespace rpde
