#pragma once

// Greedy interval counter N_{a;[s,t]} for a superadditive control omega:
//   tau_0 = s,  tau_{i+1} = inf{ u : omega(tau_i, u) >= a } ^ t,
//   N = sup{ n : tau_n < t }.
// The inf is resolved on the grid with linear interpolation of omega in its
// second argument, which reproduces the continuum definition up to grid
// resolution and is deterministic.

#include <functional>
#include <stdexcept>
#include <vector>

#include "rpde/grid.hpp"

namespace rpde {

using ControlFunction = std::function<double(double, double)>;

struct ControlRecord {
  ControlFunction omega;
  double threshold = 0.0;
  std::vector<double> taus;  // tau_0 = s, ..., last entry <= t
  int count = 0;
};

// Returns i such that times[i] is the first grid point > t (times sorted).
inline std::size_t first_index_after(const std::vector<double>& times, double t) {
  std::size_t lo = 0, hi = times.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (times[mid] > t)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

inline ControlRecord greedy_count(const ControlFunction& omega, const TimeGrid& grid,
                                  double threshold, double s, double t) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("greedy_count: threshold must be > 0");
  if (!(s < t)) throw std::invalid_argument("greedy_count: need s < t");

  ControlRecord rec;
  rec.omega = omega;
  rec.threshold = threshold;

  double tau = s;
  rec.taus.push_back(tau);
  const auto& times = grid.times();
  while (tau < t) {
    // scan grid points after tau for the first crossing of the threshold
    double prev_u = tau;
    double prev_val = 0.0;  // omega vanishes on the diagonal
    double next = t;
    bool crossed = false;
    for (std::size_t i = first_index_after(times, tau); i < times.size(); ++i) {
      const double u = std::min(times[i], t);
      const double val = omega(tau, u);
      if (val >= threshold) {
        // linear interpolation between (prev_u, prev_val) and (u, val)
        if (val > prev_val) {
          const double frac = (threshold - prev_val) / (val - prev_val);
          next = prev_u + frac * (u - prev_u);
        } else {
          next = u;
        }
        crossed = true;
        break;
      }
      prev_u = u;
      prev_val = val;
      if (u >= t) break;
    }
    if (!crossed) next = t;
    next = std::min(next, t);
    if (!(next > tau)) next = t;  // zero-length guard on degenerate omega
    tau = next;
    rec.taus.push_back(tau);
    if (tau >= t) break;
  }

  int n = 0;
  for (double v : rec.taus)
    if (v < t) ++n;
  rec.count = n - 1;  // tau_0 = s always counts; N = sup{ n : tau_n < t }
  if (rec.count < 0) rec.count = 0;
  return rec;
}

inline ControlRecord greedy_count(const ControlFunction& omega, const TimeGrid& grid,
                                  double threshold) {
  return greedy_count(omega, grid, threshold, grid[0], grid.horizon());
}

// Test hook: scans grid triples for superadditivity violations
// omega(s,u) >= omega(s,t) + omega(t,u); returns the worst signed defect
// (positive = violation).
inline double superadditivity_defect(const ControlFunction& omega,
                                     const TimeGrid& grid) {
  double worst = 0.0;
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const double defect =
            omega(grid[i], grid[j]) + omega(grid[j], grid[k]) - omega(grid[i], grid[k]);
        worst = std::max(worst, defect);
      }
  return worst;
}

// Control built from the homogeneous p-norm of a rough path restricted to
// grid pairs; a common caller-supplied omega for greedy_count.
// (p = 1/alpha; first level enters as |W|^p, areas as |A|^{p/2}.)
template <typename Path>
ControlFunction path_control(const Path& path) {
  const double p = 1.0 / path.alpha();
  return [&path, p](double s, double t) -> double {
    if (!(t > s)) return 0.0;
    const auto& g = path.grid();
    // snap to surrounding grid indices (controls sampled on grid pairs)
    std::size_t i = first_index_after(g.times(), s);
    if (i > 0 && g[i - 1] >= s) --i;
    std::size_t j = first_index_after(g.times(), t);
    if (j > 0) --j;
    if (j <= i) return 0.0;
    double acc = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      acc += std::pow(path.increment(k, k + 1).norm(), p) +
             std::pow(path.area(k, k + 1).norm(), p / 2.0);
    }
    return acc;
  };
}

}  // namespace rpde
