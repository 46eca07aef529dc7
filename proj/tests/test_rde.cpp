#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "rpde/control.hpp"
#include "rpde/rde.hpp"
#include "rpde/rng.hpp"
#include "rpde/rough_path.hpp"

using namespace rpde;

namespace {

RoughPathPtr line_path(std::size_t steps, double T = 1.0) {
  const auto grid = TimeGrid::uniform(T, steps);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = grid[i];
  return std::make_shared<GeometricRoughPath>(lift_piecewise_linear(grid, samples, 0.5));
}

VectorFieldSet scalar_linear_set() {
  return linear_vector_fields({MatrixXd::Constant(1, 1, 1.0)}, {VectorXd::Zero(1)});
}

}  // namespace

TEST_CASE("zero fields keep the state constant") {
  auto driver = line_path(32);
  VectorFieldSet set;
  set.dim_state = 2;
  set.dim_driver = 1;
  set.fields = {zero_field(2)};
  const VectorXd x0 = (VectorXd(2) << 1.0, -2.0).finished();
  const auto path = solve_rde(set, *driver, x0);
  for (const auto& s : path.states) CHECK((s - x0).norm() == 0.0);
}

TEST_CASE("scalar linear RDE reproduces the exponential") {
  auto driver = line_path(1 << 10);
  const auto path =
      solve_rde(scalar_linear_set(), *driver, VectorXd::Constant(1, 1.0));
  CHECK(path.states.back()(0) == Catch::Approx(std::exp(1.0)).margin(1e-4));
}

TEST_CASE("pure-area driver generates the bracket flow") {
  // V_j(x) = A_j x with A_0 = E_{01}, A_1 = E_{10}; driver moves only through
  // area at unit rate, so X_t = exp(t [A_1, A_0]) x_0 = diag(e^-t, e^t) x_0.
  const auto grid = TimeGrid::uniform(1.0, 1 << 14);
  const auto driver = pure_area_path(grid, 1.0);
  MatrixXd a0 = MatrixXd::Zero(2, 2), a1 = MatrixXd::Zero(2, 2);
  a0(0, 1) = 1.0;
  a1(1, 0) = 1.0;
  const VectorXd x0 = (VectorXd(2) << 1.0, 1.0).finished();
  const auto path = solve_linear_rde({a0, a1}, {VectorXd::Zero(2), VectorXd::Zero(2)},
                                     driver, x0);
  CHECK(path.states.back()(0) == Catch::Approx(std::exp(-1.0)).margin(1e-4));
  CHECK(path.states.back()(1) == Catch::Approx(std::exp(1.0)).margin(1e-4));
}

TEST_CASE("linear RDE: zero coefficients give a constant solution") {
  auto driver = line_path(64);
  const auto path = solve_linear_rde({MatrixXd::Zero(1, 1)}, {VectorXd::Zero(1)},
                                     *driver, VectorXd::Constant(1, 0.7));
  for (const auto& s : path.states) CHECK(s(0) == 0.7);
}

TEST_CASE("commuting linear fields match the matrix exponential") {
  const auto grid = TimeGrid::uniform(1.0, 1 << 10);
  std::vector<VectorXd> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    samples[i] = VectorXd(2);
    samples[i] << std::sin(grid[i]), 0.5 * grid[i] * grid[i];
  }
  auto driver = lift_piecewise_linear(grid, samples, 0.5);
  const MatrixXd a1 = (MatrixXd(2, 2) << 0.3, 0.0, 0.0, -0.2).finished();
  const MatrixXd a2 = (MatrixXd(2, 2) << -0.1, 0.0, 0.0, 0.4).finished();
  const VectorXd x0 = (VectorXd(2) << 1.0, 2.0).finished();
  const auto path = solve_linear_rde({a1, a2}, {VectorXd::Zero(2), VectorXd::Zero(2)},
                                     driver, x0);
  const VectorXd w = driver.increment(0, grid.size() - 1);
  for (int i = 0; i < 2; ++i) {
    const double expo = std::exp(a1(i, i) * w(0) + a2(i, i) * w(1));
    CHECK(path.states.back()(i) == Catch::Approx(expo * x0(i)).margin(1e-4));
  }
}

TEST_CASE("davie scheme self-converges at the expected order") {
  const double alpha = 0.45;
  const auto grid = TimeGrid::uniform(1.0, 1 << 12);
  const auto fine = brownian_lift(RngStream(2718, 0), grid, 1, alpha, 4);
  VectorFieldSet set;
  set.dim_state = 1;
  set.dim_driver = 1;
  VectorFieldFn f;
  f.value = [](const VectorXd& x) {
    return VectorXd::Constant(1, std::sin(x(0)) + 0.5);
  };
  f.jac = [](const VectorXd& x) { return MatrixXd::Constant(1, 1, std::cos(x(0))); };
  f.hess = [](const VectorXd& x) {
    return std::vector<MatrixXd>{MatrixXd::Constant(1, 1, -std::sin(x(0)))};
  };
  set.fields = {f};
  const VectorXd x0 = VectorXd::Constant(1, 0.2);

  std::vector<double> errors;
  const auto ref = solve_rde(set, fine, x0).states.back();
  for (int level = 6; level >= 2; --level) {
    const auto coarse = fine.coarsened(std::size_t{1} << level);
    errors.push_back((solve_rde(set, coarse, x0).states.back() - ref).norm());
  }
  // errors correspond to meshes halving; fit the decay order
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < errors.size(); ++k) {
    if (errors[k] > 0 && errors[k - 1] > 0) {
      num += std::log2(errors[k - 1] / errors[k]);
      den += 1.0;
    }
  }
  const double order = num / den;
  CHECK(order >= std::min(3 * alpha - 1.0, 1.0) - 0.1);
}

TEST_CASE("nan guard reports the failing step") {
  auto driver = line_path(8);
  VectorFieldSet set;
  set.dim_state = 1;
  set.dim_driver = 1;
  VectorFieldFn f;
  f.value = [](const VectorXd& x) {
    return VectorXd::Constant(1, std::exp(x(0) * x(0)) * 1e100);
  };
  f.jac = [](const VectorXd& x) {
    return MatrixXd::Constant(1, 1, 2 * x(0) * std::exp(x(0) * x(0)) * 1e100);
  };
  set.fields = {f};
  CHECK_THROWS_AS(solve_rde(set, *driver, VectorXd::Constant(1, 10.0)),
                  std::runtime_error);
}

TEST_CASE("flows: zero fields give the identity flow") {
  auto driver = line_path(16);
  VectorFieldSet set;
  set.dim_state = 2;
  set.dim_driver = 1;
  set.fields = {zero_field(2)};
  const std::vector<VectorXd> pts = {(VectorXd(2) << 0.5, -1.0).finished()};
  const auto flow = solve_flow(set, *driver, pts);
  for (std::size_t i = 0; i < flow.times.size(); ++i) {
    CHECK((flow.forward[0][i] - pts[0]).norm() == 0.0);
    CHECK((flow.jacobian[0][i] - MatrixXd::Identity(2, 2)).norm() == 0.0);
    CHECK(flow.det[0][i] == 1.0);
  }
}

TEST_CASE("flow Jacobian of the scalar exponential") {
  auto driver = line_path(1 << 10);
  const std::vector<VectorXd> pts = {VectorXd::Constant(1, 0.3)};
  const auto flow = solve_flow(scalar_linear_set(), *driver, pts);
  const std::size_t last = flow.times.size() - 1;
  CHECK(flow.jacobian[0][last](0, 0) == Catch::Approx(std::exp(1.0)).margin(1e-4));
  CHECK(flow.forward[0][0](0) == 0.3);
  CHECK(flow.jacobian[0][0](0, 0) == 1.0);
}

TEST_CASE("inverse flow undoes the forward flow") {
  const auto grid = TimeGrid::uniform(1.0, 1 << 10);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    samples[i] = 0.5 * std::sin(2.0 * grid[i]);
  auto driver = std::make_shared<GeometricRoughPath>(
      lift_piecewise_linear(grid, samples, 0.5));
  VectorFieldSet set;
  set.dim_state = 1;
  set.dim_driver = 1;
  VectorFieldFn f;
  f.value = [](const VectorXd& x) { return VectorXd::Constant(1, std::tanh(x(0)) + 0.2); };
  f.jac = [](const VectorXd& x) {
    const double c = std::cosh(x(0));
    return MatrixXd::Constant(1, 1, 1.0 / (c * c));
  };
  f.hess = [](const VectorXd& x) {
    const double t = std::tanh(x(0)), c = std::cosh(x(0));
    return std::vector<MatrixXd>{MatrixXd::Constant(1, 1, -2.0 * t / (c * c))};
  };
  set.fields = {f};

  const VectorXd x0 = VectorXd::Constant(1, 0.4);
  const auto fwd = solve_rde(set, *driver, x0);
  // Psi^{-1}_{0,T}( Phi_{0,T}(x0) ) should come back to x0
  const auto flow = solve_flow(set, *driver, {fwd.states.back()});
  CHECK((flow.inverse[0][0] - x0).norm() < 1e-6);
  // Psi^{-1}_{T,T} = id exactly
  CHECK((flow.inverse[0][grid.size() - 1] - fwd.states.back()).norm() == 0.0);
}

TEST_CASE("flow composition property is exact step-wise") {
  auto driver = line_path(64);
  VectorFieldSet set = scalar_linear_set();
  const VectorXd x0 = VectorXd::Constant(1, 1.0);
  const auto full = solve_rde(set, *driver, x0);
  // restart from the state at t = 0.5 and continue to T
  const std::size_t mid = 32;
  const auto tail_driver = driver->window(mid, 64);
  const auto tail = solve_rde(set, tail_driver, full.states[mid]);
  CHECK((tail.states.back() - full.states.back()).norm() < 1e-12);
}

TEST_CASE("liouville: trace-free linear fields have unit determinant") {
  const auto grid = TimeGrid::uniform(1.0, 256);
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = std::sin(grid[i]);
  auto driver = lift_piecewise_linear(grid, samples, 0.5);
  MatrixXd rot(2, 2);
  rot << 0, -1, 1, 0;  // antisymmetric, trace free
  const auto fields = linear_vector_fields({rot}, {VectorXd::Zero(2)});
  const auto det = det_jacobian(fields, driver, (VectorXd(2) << 1.0, 0.0).finished());
  for (double v : det.det_liouville) CHECK(v == Catch::Approx(1.0).margin(1e-12));
  for (double v : det.det_direct) CHECK(v == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("liouville: scalar exponential determinant") {
  auto driver = line_path(1 << 10);
  const auto det =
      det_jacobian(scalar_linear_set(), *driver, VectorXd::Constant(1, 1.0));
  CHECK(det.det_liouville.back() == Catch::Approx(std::exp(1.0)).margin(1e-4));
  CHECK(det.det_direct.back() == Catch::Approx(std::exp(1.0)).margin(1e-4));
}

TEST_CASE("liouville agrees with the direct determinant on a nonlinear field") {
  const auto grid = TimeGrid::uniform(1.0, 1 << 11);
  std::vector<VectorXd> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    samples[i] = VectorXd(1);
    samples[i] << 0.6 * std::sin(grid[i]) + 0.2 * grid[i];
  }
  auto driver = lift_piecewise_linear(grid, samples, 0.5);
  VectorFieldSet set;
  set.dim_state = 2;
  set.dim_driver = 1;
  VectorFieldFn f;
  f.value = [](const VectorXd& x) {
    return (VectorXd(2) << std::sin(x(1)), 0.3 * std::cos(x(0))).finished();
  };
  f.jac = [](const VectorXd& x) {
    MatrixXd j(2, 2);
    j << 0.0, std::cos(x(1)), -0.3 * std::sin(x(0)), 0.0;
    return j;
  };
  f.hess = [](const VectorXd& x) {
    MatrixXd h0 = MatrixXd::Zero(2, 2), h1 = MatrixXd::Zero(2, 2);
    h0(1, 1) = -std::sin(x(1));
    h1(0, 0) = -0.3 * std::cos(x(0));
    return std::vector<MatrixXd>{h0, h1};
  };
  set.fields = {f};
  const auto det = det_jacobian(set, driver, (VectorXd(2) << 0.1, -0.2).finished());
  for (std::size_t i = 0; i < det.times.size(); ++i)
    CHECK(det.det_direct[i] == Catch::Approx(det.det_liouville[i]).margin(1e-6));
}

TEST_CASE("linear growth bound against the greedy counter stays moderate") {
  // regression guard, not a proof: log sup |X| <= C (1 + N_{1;[0,T]})
  for (int trial = 0; trial < 4; ++trial) {
    const auto grid = TimeGrid::uniform(1.0, 512);
    const auto driver = brownian_lift(RngStream(555, trial), grid, 1, 0.45, 4);
    const auto path = solve_linear_rde({MatrixXd::Constant(1, 1, 1.0)},
                                       {VectorXd::Zero(1)}, driver,
                                       VectorXd::Constant(1, 1.0));
    double sup = 0.0;
    for (const auto& s : path.states) sup = std::max(sup, std::abs(s(0)));
    const auto omega = path_control(driver);
    const int n1 = greedy_count(omega, grid, 1.0).count;
    const double ratio = std::log(1.0 + sup) / (1.0 + n1);
    CHECK(ratio <= 3.0);
  }
}

TEST_CASE("derivative consistency checker accepts analytic fields") {
  const auto f = linear_field((MatrixXd(2, 2) << 1, 2, 3, 4).finished(),
                              (VectorXd(2) << 1, 1).finished());
  CHECK(derivative_consistency_defect(f, 2) < 1e-3);
}
