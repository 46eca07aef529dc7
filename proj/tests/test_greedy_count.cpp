#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rpde/control.hpp"
#include "rpde/rng.hpp"
#include "rpde/rough_path.hpp"

using namespace rpde;

namespace {

// Independent oracle: walk the grid left to right, accumulating
// omega(tau, .) until it crosses the threshold, with the same
// linear-interpolation convention resolved by direct bisection between the
// bracketing grid points instead of the closed-form crossing.
int brute_force_count(const ControlFunction& omega, const TimeGrid& grid,
                      double a, double s, double t) {
  int count = 0;
  double tau = s;
  const auto& times = grid.times();
  while (tau < t) {
    double next = t;
    bool crossed = false;
    double pu = tau, pv = 0.0;
    for (double u : times) {
      if (u <= tau) continue;
      const double uu = std::min(u, t);
      const double val = omega(tau, uu);
      if (val >= a) {
        // bisect the linear interpolation between (pu, pv) and (uu, val)
        double lo = pu, hi = uu;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double ival = pv + (val - pv) * (mid - pu) / (uu - pu);
          if (ival >= a)
            hi = mid;
          else
            lo = mid;
        }
        next = hi;
        crossed = true;
        break;
      }
      pu = uu;
      pv = val;
      if (uu >= t) break;
    }
    if (!crossed) break;
    tau = std::min(next, t);
    if (tau < t) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("greedy count hand case: omega = t - s, a = 0.3") {
  const auto grid = TimeGrid::uniform(1.0, 10);
  const auto rec = greedy_count([](double s, double t) { return t - s; }, grid, 0.3);
  CHECK(rec.count == 3);
  REQUIRE(rec.taus.size() == 5);
  CHECK(rec.taus[0] == Catch::Approx(0.0));
  CHECK(rec.taus[1] == Catch::Approx(0.3));
  CHECK(rec.taus[2] == Catch::Approx(0.6));
  CHECK(rec.taus[3] == Catch::Approx(0.9));
  CHECK(rec.taus[4] == Catch::Approx(1.0));
}

TEST_CASE("greedy count of the zero control is zero") {
  const auto grid = TimeGrid::uniform(1.0, 8);
  const auto rec = greedy_count([](double, double) { return 0.0; }, grid, 0.5);
  CHECK(rec.count == 0);
}

TEST_CASE("threshold above omega(0,T) gives zero") {
  const auto grid = TimeGrid::uniform(1.0, 8);
  const auto rec = greedy_count([](double s, double t) { return t - s; }, grid, 1.5);
  CHECK(rec.count == 0);
  CHECK(rec.taus.back() == Catch::Approx(1.0));
}

TEST_CASE("greedy count rejects bad arguments") {
  const auto grid = TimeGrid::uniform(1.0, 4);
  CHECK_THROWS(greedy_count([](double s, double t) { return t - s; }, grid, 0.0));
  CHECK_THROWS(greedy_count([](double s, double t) { return t - s; }, grid, 0.5, 0.7, 0.2));
}

TEST_CASE("greedy count agrees exactly with brute-force scan on random controls") {
  for (int trial = 0; trial < 100; ++trial) {
    RngStream rng(2024, trial);
    const std::size_t steps = 8 + (rng.next_u64() % 24);
    const auto grid = TimeGrid::uniform(1.0, steps);
    // additive control omega(s,t) = F(t) - F(s), F increasing piecewise linear
    std::vector<double> density(steps);
    for (auto& d : density) d = 0.05 + 2.0 * rng.uniform01();
    std::vector<double> cum(steps + 1, 0.0);
    for (std::size_t k = 0; k < steps; ++k) cum[k + 1] = cum[k] + density[k] * grid.dt(k);
    auto F = [grid, cum, density](double t) {
      std::size_t i = first_index_after(grid.times(), t);
      if (i > 0) --i;
      if (i >= density.size()) return cum.back();
      return cum[i] + density[i] * (t - grid[i]);
    };
    ControlFunction omega = [F](double s, double t) {
      return t > s ? F(t) - F(s) : 0.0;
    };
    const double a = 0.05 + 0.8 * rng.uniform01();
    const auto rec = greedy_count(omega, grid, a);
    const int oracle = brute_force_count(omega, grid, a, 0.0, grid.horizon());
    INFO("trial " << trial << " steps " << steps << " a " << a);
    CHECK(rec.count == oracle);
  }
}

TEST_CASE("greedy count is non-increasing in the threshold") {
  const auto grid = TimeGrid::uniform(1.0, 32);
  RngStream rng(7, 7);
  std::vector<double> cum(grid.size(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k)
    cum[k] = cum[k - 1] + 0.1 + rng.uniform01();
  ControlFunction omega = [grid, cum](double s, double t) {
    if (t <= s) return 0.0;
    auto at = [&](double x) {
      std::size_t i = first_index_after(grid.times(), x);
      if (i > 0) --i;
      if (i + 1 >= grid.size()) return cum.back();
      const double f = (x - grid[i]) / grid.dt(i);
      return cum[i] * (1 - f) + cum[i + 1] * f;
    };
    return at(t) - at(s);
  };
  int prev = -1;
  for (double a : {0.2, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const int c = greedy_count(omega, grid, a).count;
    if (prev >= 0) CHECK(c <= prev);
    prev = c;
  }
}

TEST_CASE("greedy count is superadditive over interval concatenation") {
  const auto grid = TimeGrid::uniform(1.0, 40);
  ControlFunction omega = [](double s, double t) { return (t - s) + 0.3 * (t * t - s * s); };
  CHECK(superadditivity_defect(omega, grid) <= 1e-12);
  for (double mid : {0.25, 0.5, 0.725}) {
    for (double a : {0.07, 0.11, 0.23}) {
      const int whole = greedy_count(omega, grid, a, 0.0, 1.0).count;
      const int left = greedy_count(omega, grid, a, 0.0, mid).count;
      const int right = greedy_count(omega, grid, a, mid, 1.0).count;
      CHECK(whole >= left + right - 1);
    }
  }
}

TEST_CASE("path control feeds the greedy counter") {
  const auto grid = TimeGrid::uniform(1.0, 64);
  const auto path = brownian_lift(RngStream(11, 0), grid, 2, 0.45, 8);
  const auto omega = path_control(path);
  CHECK(superadditivity_defect(omega, grid) <= 1e-12);
  const auto rec = greedy_count(omega, grid, 1.0);
  CHECK(rec.count >= 0);
  CHECK(rec.taus.front() == 0.0);
  for (std::size_t i = 1; i < rec.taus.size(); ++i)
    CHECK(rec.taus[i] >= rec.taus[i - 1]);
}
