#include <doctest.h>

#include <cmath>

#include "swopt/integrator.hpp"
#include "swopt/registry.hpp"
#include "test_support.hpp"

using namespace swopt;
using namespace swopt::testing;

namespace {

OdeRhs exponential() {
  return [](const Vec& y, double, Vec& dy) { dy = y; };
}

}  // namespace

TEST_CASE("constant rhs keeps the state constant") {
  const OdeRhs rhs = [](const Vec&, double, Vec& dy) { dy.setZero(); };
  for (auto method : {IntegrationMethod::rk4_fixed, IntegrationMethod::rkf45_adaptive}) {
    IntegratorConfig cfg;
    cfg.method = method;
    const Vec y = integrate_endpoint(rhs, vec2(3.5, -1.25), 0.0, 2.0, cfg);
    CHECK(y(0) == 3.5);
    CHECK(y(1) == -1.25);
  }
}

TEST_CASE("exponential growth reaches e within tolerance") {
  IntegratorConfig cfg;
  for (auto method : {IntegrationMethod::rk4_fixed, IntegrationMethod::rkf45_adaptive}) {
    cfg.method = method;
    const Vec y = integrate_endpoint(exponential(), vec1(1.0), 0.0, 1.0, cfg);
    CHECK(std::abs(y(0) - std::exp(1.0)) <= 1e-8 * std::exp(1.0));
  }
}

TEST_CASE("rk4 integrates polynomial dynamics exactly") {
  // y1' = 2 y2, y2' = 0: the solution is polynomial, so rk4 is exact.
  const OdeRhs rhs = [](const Vec& y, double, Vec& dy) {
    dy(0) = 2.0 * y(1);
    dy(1) = 0.0;
  };
  IntegratorConfig cfg;
  cfg.method = IntegrationMethod::rk4_fixed;
  cfg.fixed_steps_per_unit_time = 64;
  const Vec y = integrate_endpoint(rhs, vec2(0, 1), 0.0, 1.0, cfg);
  CHECK(std::abs(y(0) - 2.0) <= 1e-14);
  CHECK(std::abs(y(1) - 1.0) <= 1e-15);
}

TEST_CASE("rk4 global error drops at fourth order") {
  IntegratorConfig coarse, fine;
  coarse.method = fine.method = IntegrationMethod::rk4_fixed;
  coarse.fixed_steps_per_unit_time = 50;
  fine.fixed_steps_per_unit_time = 100;
  const double exact = std::exp(1.0);
  const double e_coarse =
      std::abs(integrate_endpoint(exponential(), vec1(1), 0, 1, coarse)(0) - exact);
  const double e_fine =
      std::abs(integrate_endpoint(exponential(), vec1(1), 0, 1, fine)(0) - exact);
  CHECK(e_coarse / e_fine >= 14.0);
}

TEST_CASE("rkf45 endpoint agrees with high-resolution rk4 on registry dynamics") {
  for (const auto& name : registry_names()) {
    SwitchedOCP p = registry_get(name);
    for (Mode mode : {Mode::one, Mode::two}) {
      const Vec u0 = Vec::Zero(p.m_dim);
      const OdeRhs rhs = [&p, mode, &u0](const Vec& y, double t, Vec& dy) {
        dy = p.dynamics(mode).rhs(y, u0, t);
      };
      IntegratorConfig adaptive;
      adaptive.method = IntegrationMethod::rkf45_adaptive;
      IntegratorConfig reference;
      reference.method = IntegrationMethod::rk4_fixed;
      reference.fixed_steps_per_unit_time = 2000;
      const Vec ya = integrate_endpoint(rhs, p.x0, p.t0, p.tf, adaptive);
      const Vec yr = integrate_endpoint(rhs, p.x0, p.t0, p.tf, reference);
      CHECK((ya - yr).cwiseAbs().maxCoeff() <=
            10.0 * adaptive.rel_tol * (1.0 + yr.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("dense output copies step values exactly at coinciding grid points") {
  IntegratorConfig cfg;
  cfg.method = IntegrationMethod::rk4_fixed;
  cfg.fixed_steps_per_unit_time = 100;  // steps at multiples of 0.01
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const OdeTrajectory traj =
      integrate(exponential(), vec1(1.0), 0.0, 1.0, cfg, grid);
  REQUIRE(traj.times.size() == grid.size());
  // Same step sequence as integrating straight to the grid point.
  for (size_t i = 1; i < grid.size(); ++i) {
    const Vec direct =
        integrate_endpoint(exponential(), vec1(1.0), 0.0, grid[i], cfg);
    CHECK(traj.values[i](0) == direct(0));
  }
  CHECK(traj.values[0](0) == 1.0);
}

TEST_CASE("dense output interpolates between steps at fourth order") {
  IntegratorConfig cfg;
  cfg.method = IntegrationMethod::rk4_fixed;
  cfg.fixed_steps_per_unit_time = 50;
  const std::vector<double> grid = uniform_grid(0.0, 1.0, 173);
  const OdeTrajectory traj =
      integrate(exponential(), vec1(1.0), 0.0, 1.0, cfg, grid);
  double worst = 0.0;
  for (size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, std::abs(traj.values[i](0) - std::exp(grid[i])));
  CHECK(worst <= 1e-7);
}

TEST_CASE("integration errors carry context") {
  IntegratorConfig cfg;
  cfg.method = IntegrationMethod::rk4_fixed;
  cfg.fixed_steps_per_unit_time = 1000;
  cfg.max_steps = 10;
  CHECK_THROWS_AS(integrate_endpoint(exponential(), vec1(1), 0, 1, cfg),
                  StepBudgetExceeded);

  IntegratorConfig bad;
  CHECK_THROWS_AS(integrate_endpoint(exponential(), vec1(1), 1.0, 0.5, bad),
                  ContractViolation);

  // rhs turns non-finite past t = 0.5
  const OdeRhs blows = [](const Vec& y, double t, Vec& dy) {
    dy(0) = t > 0.5 ? std::numeric_limits<double>::quiet_NaN() : y(0);
  };
  try {
    integrate_endpoint(blows, vec1(1), 0.0, 1.0, bad);
    CHECK(false);
  } catch (const NumericalBlowup& e) {
    CHECK(e.t >= 0.4);
    CHECK(e.t <= 1.0);
  }
}

TEST_CASE("trajectory grids are well formed") {
  IntegratorConfig cfg;
  const OdeTrajectory traj = integrate(exponential(), vec1(1.0), 0.0, 1.5, cfg);
  REQUIRE(traj.times.size() == traj.values.size());
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == 1.5);
  for (size_t i = 1; i < traj.times.size(); ++i) {
    CHECK(traj.times[i] > traj.times[i - 1]);
    CHECK(traj.values[i].allFinite());
  }
  // linear interpolation clamps outside the span
  CHECK(traj.interpolate(-1.0)(0) == traj.values.front()(0));
  CHECK(traj.interpolate(9.0)(0) == traj.values.back()(0));
  // piecewise-linear lookup on the natural (coarse) step grid
  CHECK(traj.interpolate(0.75)(0) ==
        doctest::Approx(std::exp(0.75)).epsilon(5e-3));
}
