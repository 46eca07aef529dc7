#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpde {

// Strictly increasing time stamps on [0, T] with times.front() == 0.
class TimeGrid {
 public:
  TimeGrid() = default;

  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2)
      throw std::invalid_argument("TimeGrid: need at least 2 points");
    if (times_.front() != 0.0)
      throw std::invalid_argument("TimeGrid: times must start at 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw std::invalid_argument("TimeGrid: times must be strictly increasing");
  }

  static TimeGrid uniform(double horizon, std::size_t steps) {
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i)
      t[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    t.back() = horizon;
    return TimeGrid(std::move(t));
  }

  std::size_t size() const { return times_.size(); }
  std::size_t steps() const { return times_.size() - 1; }
  double operator[](std::size_t i) const { return times_[i]; }
  double horizon() const { return times_.back(); }
  double dt(std::size_t step) const { return times_[step + 1] - times_[step]; }
  const std::vector<double>& times() const { return times_; }

  double min_step() const {
    double h = times_[1] - times_[0];
    for (std::size_t i = 1; i + 1 < times_.size(); ++i)
      h = std::min(h, times_[i + 1] - times_[i]);
    return h;
  }
  double max_step() const {
    double h = 0.0;
    for (std::size_t i = 0; i + 1 < times_.size(); ++i)
      h = std::max(h, times_[i + 1] - times_[i]);
    return h;
  }

  // Index of a grid time equal to t (within fp slack); throws otherwise.
  std::size_t index_of(double t) const {
    const double tol = 1e-9 * std::max(1.0, horizon());
    for (std::size_t i = 0; i < times_.size(); ++i)
      if (std::abs(times_[i] - t) <= tol) return i;
    throw std::invalid_argument("TimeGrid: time " + std::to_string(t) +
                                " is not a grid point");
  }

  bool operator==(const TimeGrid& o) const { return times_ == o.times_; }

 private:
  std::vector<double> times_;
};

// Uniform spatial box [-L, L]^dim with n points per axis (n >= 2).
class SpaceGrid {
 public:
  SpaceGrid() = default;
  SpaceGrid(int dim, double half_width, std::size_t points_per_axis)
      : dim_(dim), half_width_(half_width), n_(points_per_axis) {
    if (dim < 1 || dim > 2)
      throw std::invalid_argument("SpaceGrid: only dim 1 and 2 supported");
    if (!(half_width > 0.0)) throw std::invalid_argument("SpaceGrid: L must be > 0");
    if (points_per_axis < 2)
      throw std::invalid_argument("SpaceGrid: need at least 2 points per axis");
  }

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  std::size_t points_per_axis() const { return n_; }
  std::size_t total_points() const {
    std::size_t p = 1;
    for (int k = 0; k < dim_; ++k) p *= n_;
    return p;
  }
  double mesh() const {
    return 2.0 * half_width_ / static_cast<double>(n_ - 1);
  }
  double coord(std::size_t i) const {
    return -half_width_ + mesh() * static_cast<double>(i);
  }

 private:
  int dim_ = 1;
  double half_width_ = 1.0;
  std::size_t n_ = 2;
};

}  // namespace rpde
