#include <doctest.h>

#include <cmath>

#include "swopt/gel.hpp"
#include "swopt/registry.hpp"
#include "test_support.hpp"

using namespace swopt;
using namespace swopt::testing;

namespace {

GelResult run_gel(const std::string& name, double tau0,
                  HeldOut held = HeldOut::jump_magnitude_residual) {
  SwitchedOCP p = registry_get(name);
  GelConfig cfg;
  cfg.tau0 = tau0;
  cfg.formulation.held_out = held;
  return solve_gel(p, cfg, ShootingConfig{});
}

}  // namespace

TEST_CASE("absolute error helper") {
  CHECK(absolute_error(0.7495, 0.7495) == 0.0);
  CHECK(absolute_error(0.7230, 0.7495) == doctest::Approx(0.0265));
  CHECK(absolute_error(1.0004, 1.0000) == doctest::Approx(4e-4));
}

TEST_CASE("published convergence: ex1 from tau0 = 0.5") {
  const GelResult r = run_gel("ex1-scalar-tv", 0.5);
  CHECK(r.converged);
  CHECK(std::abs(r.tau_star - 0.7495) <= 1e-3);
  CHECK(std::abs(r.J_star - 0.5558) <= 1e-3);
  CHECK(r.trace.iterations <= 8);
  CHECK((r.delta_lambda_empirical - r.delta_lambda_law).cwiseAbs().maxCoeff() <=
        1e-3);
}

TEST_CASE("published convergence: ex2 from tau0 = 1.5") {
  const GelResult r = run_gel("ex2-linear-terminal", 1.5);
  CHECK(r.converged);
  CHECK(std::abs(r.tau_star - 1.1625) <= 1e-3);
  CHECK(std::abs(r.J_star - 0.1130) <= 1e-3);
  CHECK(std::abs(r.solution.x_switch(0) - 4.5562) <= 2e-3);
  CHECK(std::abs(r.solution.x_switch(1) - 2.4438) <= 2e-3);
  CHECK(r.trace.iterations <= 8);
}

TEST_CASE("published convergence: ex3 from tau0 = 0.5") {
  const GelResult r = run_gel("ex3-bilinear-tv", 0.5);
  CHECK(r.converged);
  CHECK(std::abs(r.tau_star - 1.0004) <= 2e-3);
  CHECK(r.J_star <= 2e-3);
  CHECK(r.trace.iterations <= 8);
}

TEST_CASE("gel matches the independent optima on the remaining problems") {
  const GelResult c = run_gel("circle-tiv", 0.5);
  CHECK(c.converged);
  CHECK(std::abs(c.tau_star - circle_truth().tau) <= 2e-4);
  CHECK(std::abs(c.J_star - circle_truth().J) <= 1e-4);

  const GelResult l = run_gel("linear-tv", 0.5);
  CHECK(l.converged);
  CHECK(std::abs(l.tau_star - linear_tv_truth().tau) <= 2e-4);
  CHECK(std::abs(l.J_star - linear_tv_truth().J) <= 1e-4);
}

TEST_CASE("residual_F at the published circle-tiv optimum is small") {
  SwitchedOCP p = registry_get("circle-tiv");
  auto [F, sol] = residual_F(p, 0.8881, BvpFormulation{}, ShootingConfig{},
                             BvpGuess::linear());
  CHECK(std::abs(F) <= 1e-3);
  CHECK(sol.residual_norm <= 1e-9);
}

TEST_CASE("residual_F changes sign across the circle-tiv optimum") {
  SwitchedOCP p = registry_get("circle-tiv");
  ShootingConfig cfg;
  const BvpFormulation form{};
  auto [F_lo, s_lo] = residual_F(p, 0.5, form, cfg, BvpGuess::linear());
  auto [F_in1, s1] = residual_F(p, 0.85, form, cfg, BvpGuess::warm(s_lo));
  auto [F_in2, s2] = residual_F(p, 0.95, form, cfg, BvpGuess::warm(s1));
  auto [F_hi, s_hi] = residual_F(p, 1.2, form, cfg, BvpGuess::warm(s2));
  CHECK(F_lo * F_hi < 0.0);
  CHECK(F_in1 * F_in2 < 0.0);  // brackets tau* = 0.8881
}

TEST_CASE("identical-modes problem: the magnitude residual vanishes at the natural crossing") {
  SwitchedOCP p = degenerate_identical_modes();
  auto [F, sol] = residual_F(p, kDegenerateCrossing, BvpFormulation{},
                             ShootingConfig{}, BvpGuess::linear());
  CHECK(std::abs(F) <= 1e-6);
  // gel converges to the crossing of the unconstrained optimum
  GelConfig cfg;
  cfg.tau0 = 0.9;
  const GelResult r = solve_gel(p, cfg, ShootingConfig{});
  CHECK(r.converged);
  CHECK(std::abs(r.tau_star - kDegenerateCrossing) <= 1e-3);
  CHECK(r.J_star == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.delta_lambda_empirical.cwiseAbs().maxCoeff() <= 3e-4);
}

TEST_CASE("both held-out formulations land on the same switching time") {
  for (const char* name : {"circle-tiv", "ex1-scalar-tv"}) {
    const double tau0 = 0.5;
    const GelResult a = run_gel(name, tau0, HeldOut::jump_magnitude_residual);
    const GelResult b = run_gel(name, tau0, HeldOut::interface_residual);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(std::abs(a.tau_star - b.tau_star) <= 1e-4);
  }
}

TEST_CASE("at the fixed point both held-out residuals are below 10x tol") {
  SwitchedOCP p = registry_get("ex1-scalar-tv");
  GelConfig cfg;
  cfg.tau0 = 0.5;
  const GelResult r = solve_gel(p, cfg, ShootingConfig{});
  REQUIRE(r.converged);
  for (HeldOut held :
       {HeldOut::jump_magnitude_residual, HeldOut::interface_residual}) {
    auto [F, sol] = residual_F(p, r.tau_star, BvpFormulation{held},
                               ShootingConfig{}, BvpGuess::warm(r.solution));
    CHECK(std::abs(F) <= 10.0 * cfg.tol);
  }
}

TEST_CASE("accepted steps decrease |F| monotonically") {
  for (const char* name : {"circle-tiv", "linear-tv", "ex1-scalar-tv",
                           "ex3-bilinear-tv"}) {
    const GelResult r = run_gel(name, 0.5);
    REQUIRE(r.converged);
    for (size_t i = 1; i < r.trace.records.size(); ++i)
      CHECK(std::abs(r.trace.records[i].F) <
            std::abs(r.trace.records[i - 1].F));
  }
}

TEST_CASE("near the root the iteration contracts like Newton on a smooth scalar") {
  const GelResult r = run_gel("circle-tiv", 0.5);
  REQUIRE(r.converged);
  const double tau_star = r.tau_star;
  std::vector<double> errs;
  for (const auto& it : r.trace.records) {
    const double e = std::abs(it.tau - tau_star);
    if (e > 0.0) errs.push_back(e);
  }
  REQUIRE(errs.size() >= 3);
  double C = 0.0;
  int measured = 0;
  for (size_t i = 0; i + 1 < errs.size(); ++i) {
    if (errs[i] < 0.05) {
      CHECK(errs[i + 1] < errs[i]);
      C = std::max(C, errs[i + 1] / (errs[i] * errs[i]));
      ++measured;
    }
  }
  CHECK(measured >= 2);
  CHECK(std::isfinite(C));
  CHECK(C <= 5e3);
  MESSAGE("measured contraction constant C = ", C);
}

TEST_CASE("trace bookkeeping") {
  const GelResult r = run_gel("ex1-scalar-tv", 0.5);
  REQUIRE(!r.trace.records.empty());
  SwitchedOCP p = registry_get("ex1-scalar-tv");
  for (const auto& it : r.trace.records) {
    CHECK(it.tau > p.t0);
    CHECK(it.tau < p.tf);
    CHECK(it.inner_residual <= 1e-9);
  }
  CHECK(r.trace.stop_reason == GelStop::residual_below_tol);
  CHECK(std::string(to_string(r.trace.stop_reason)) == "ResidualBelowTol");
}

TEST_CASE("iteration budget exhaustion returns the best iterate flagged MaxIters") {
  SwitchedOCP p = registry_get("circle-tiv");
  GelConfig cfg;
  cfg.tau0 = 0.5;
  cfg.max_iters = 1;
  const GelResult r = solve_gel(p, cfg, ShootingConfig{});
  CHECK(!r.converged);
  CHECK(r.trace.stop_reason == GelStop::max_iters);
  CHECK(r.trace.iterations <= 1);
  CHECK(std::isfinite(r.J_star));
}

TEST_CASE("a failing first inner solve surfaces as InnerFailure") {
  SwitchedOCP p = registry_get("ex3-bilinear-tv");
  ShootingConfig starved;
  starved.max_newton_iters = 1;
  GelConfig cfg;
  CHECK_THROWS_AS(solve_gel(p, cfg, starved), InnerFailure);
  CHECK_THROWS_AS(residual_F(p, 0.5, BvpFormulation{}, starved,
                             BvpGuess::linear()),
                  InnerFailure);
}

TEST_CASE("invalid configurations are rejected") {
  SwitchedOCP p = registry_get("ex1-scalar-tv");
  GelConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(solve_gel(p, cfg, ShootingConfig{}), ContractViolation);
  cfg = GelConfig{};
  cfg.tol = -1.0;
  CHECK_THROWS_AS(solve_gel(p, cfg, ShootingConfig{}), ContractViolation);
}
