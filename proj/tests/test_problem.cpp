#include <doctest.h>

#include "swopt/finite_diff.hpp"
#include "swopt/problem.hpp"
#include "swopt/registry.hpp"
#include "test_support.hpp"

using namespace swopt;
using namespace swopt::testing;

TEST_CASE("hamiltonian matches L + lambda^T f on hand cases") {
  SwitchedOCP p = registry_get("circle-tiv");
  CHECK(hamiltonian(p, Mode::one, vec2(0, 0), vec2(0, 0), vec1(0), 0.0) ==
        doctest::Approx(0.0));
  // mode 2: L = u^2/2, f = (x2, u)
  CHECK(hamiltonian(p, Mode::two, vec2(1, 1), vec2(1, 1), vec1(2), 0.0) ==
        doctest::Approx(5.0));
}

TEST_CASE("hamiltonian identity H - lambda^T f - L = 0 at random points") {
  for (const auto& name : registry_names()) {
    SwitchedOCP p = registry_get(name);
    for (int trial = 0; trial < 40; ++trial) {
      const Mode mode = trial % 2 ? Mode::one : Mode::two;
      const Vec x = random_vec(p.n, -5, 5);
      const Vec lam = random_vec(p.n, -5, 5);
      const Vec u = random_vec(p.m_dim, -5, 5);
      const double t = uniform(p.t0, p.tf);
      const double H = hamiltonian(p, mode, x, lam, u, t);
      const double direct =
          p.cost(mode).value(x, u, t) + lam.dot(p.dynamics(mode).rhs(x, u, t));
      CHECK(std::abs(H - direct) <= 1e-12 * (1.0 + std::abs(H)));
    }
  }
}

TEST_CASE("hamiltonian rejects dimension mismatches") {
  SwitchedOCP p = registry_get("circle-tiv");
  CHECK_THROWS_AS(hamiltonian(p, Mode::one, vec1(0), vec2(0, 0), vec1(0), 0.0),
                  ContractViolation);
  CHECK_THROWS_AS(hamiltonian(p, Mode::one, vec2(0, 0), vec2(0, 0),
                              vec2(0, 0), 0.0),
                  ContractViolation);
}

TEST_CASE("costate_rhs on hand cases") {
  SUBCASE("ex2 mode one is -A1^T lambda") {
    SwitchedOCP p = registry_get("ex2-linear-terminal");
    const Vec r = costate_rhs(p, Mode::one, vec2(1, 1), vec2(1, 1), 0.3);
    CHECK(r(0) == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(r(1) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  SUBCASE("circle mode one depends only on lambda_1") {
    SwitchedOCP p = registry_get("circle-tiv");
    const Vec r = costate_rhs(p, Mode::one, vec2(0.3, -0.7), vec2(0.5, 2.0), 0.1);
    CHECK(r(0) == doctest::Approx(0.0));
    CHECK(r(1) == doctest::Approx(-1.0).epsilon(1e-12));  // -2 * lambda_1
  }
  SUBCASE("ex3 mode one against finite differences of H in x") {
    SwitchedOCP p = registry_get("ex3-bilinear-tv");
    const Vec x = vec1(1.0), lam = vec1(0.5);
    const Vec r = costate_rhs(p, Mode::one, x, lam, 0.4);
    CHECK(r(0) == doctest::Approx(-0.25).epsilon(1e-9));
    const Vec u = optimal_control(p, Mode::one, x, lam, 0.4);
    const Vec fd_grad = fd::gradient(
        [&](const Vec& xx) { return hamiltonian(p, Mode::one, xx, lam, u, 0.4); },
        x);
    CHECK(r(0) == doctest::Approx(-fd_grad(0)).epsilon(1e-6));
  }
}

TEST_CASE("optimal_control closed forms") {
  SwitchedOCP p = registry_get("circle-tiv");
  const Vec lam = vec2(0.3, -1.2);
  CHECK(optimal_control(p, Mode::one, vec2(0, 0), lam, 0.0)(0) ==
        doctest::Approx(4.8));  // -4 lambda_2
  CHECK(optimal_control(p, Mode::two, vec2(0, 0), lam, 0.0)(0) ==
        doctest::Approx(1.2));  // -lambda_2

  SwitchedOCP b = registry_get("ex3-bilinear-tv");
  CHECK(optimal_control(b, Mode::one, vec1(2), vec1(1), 0.0)(0) ==
        doctest::Approx(-2.0));
  const Vec r = stationarity_residual(b, Mode::one, vec1(2), vec1(-2), vec1(1), 0.0);
  CHECK(std::abs(r(0)) <= 1e-12);
}

TEST_CASE("stationarity residual bound holds at random states") {
  for (const auto& name : registry_names()) {
    SwitchedOCP p = registry_get(name);
    for (int trial = 0; trial < 50; ++trial) {
      const Mode mode = trial % 2 ? Mode::one : Mode::two;
      const Vec x = random_vec(p.n, -5, 5);
      const Vec lam = random_vec(p.n, -5, 5);
      const double t = uniform(p.t0, p.tf);
      const Vec u = optimal_control(p, mode, x, lam, t);
      const Vec r = stationarity_residual(p, mode, x, u, lam, t);
      CHECK(r.cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("Newton-on-stationarity fallback reproduces the analytic law") {
  SwitchedOCP p = registry_get("circle-tiv");
  SwitchedOCP q = p;
  q.control = NewtonOnStationarity{};
  for (int trial = 0; trial < 20; ++trial) {
    const Mode mode = trial % 2 ? Mode::one : Mode::two;
    const Vec x = random_vec(2, -3, 3);
    const Vec lam = random_vec(2, -3, 3);
    const Vec ua = optimal_control(p, mode, x, lam, 0.5);
    const Vec un = optimal_control(q, mode, x, lam, 0.5);
    CHECK(std::abs(ua(0) - un(0)) <= 1e-8 * (1.0 + std::abs(ua(0))));
  }

  SwitchedOCP b = registry_get("ex3-bilinear-tv");
  b.control = NewtonOnStationarity{};
  const Vec u = optimal_control(b, Mode::one, vec1(2), vec1(1), 0.0);
  CHECK(u(0) == doctest::Approx(-2.0).epsilon(1e-8));
}

TEST_CASE("analytic jacobians and gradients match central differences") {
  for (const auto& name : registry_names()) {
    SwitchedOCP p = registry_get(name);
    for (int trial = 0; trial < 20; ++trial) {
      const Mode mode = trial % 2 ? Mode::one : Mode::two;
      const auto& dyn = p.dynamics(mode);
      const auto& cost = p.cost(mode);
      const Vec x = random_vec(p.n, -4, 4);
      const Vec u = random_vec(p.m_dim, -4, 4);
      const double t = uniform(p.t0, p.tf);

      const Mat jx = dyn.jac_x(x, u, t);
      const Mat jx_fd =
          fd::jacobian([&](const Vec& xx) { return dyn.rhs(xx, u, t); }, x);
      CHECK((jx - jx_fd).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + jx.cwiseAbs().maxCoeff()));

      const Mat ju = dyn.jac_u(x, u, t);
      const Mat ju_fd =
          fd::jacobian([&](const Vec& uu) { return dyn.rhs(x, uu, t); }, u);
      CHECK((ju - ju_fd).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + ju.cwiseAbs().maxCoeff()));

      const Vec gx = cost.grad_x(x, u, t);
      const Vec gx_fd =
          fd::gradient([&](const Vec& xx) { return cost.value(xx, u, t); }, x);
      CHECK((gx - gx_fd).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + gx.cwiseAbs().maxCoeff()));

      const Vec gu = cost.grad_u(x, u, t);
      const Vec gu_fd =
          fd::gradient([&](const Vec& uu) { return cost.value(x, uu, t); }, u);
      CHECK((gu - gu_fd).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + gu.cwiseAbs().maxCoeff()));

      const Vec m = p.interface.grad_x(x, t);
      const Vec m_fd =
          fd::gradient([&](const Vec& xx) { return p.interface.g(xx, t); }, x);
      CHECK((m - m_fd).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + m.cwiseAbs().maxCoeff()));
      CHECK(m.norm() > 1e-12);

      const double mu = p.interface.time_partial(x, t);
      const double mu_fd = fd::time_derivative(
          [&](double tt) { return p.interface.g(x, tt); }, t);
      CHECK(std::abs(mu - mu_fd) <= 1e-5 * (1.0 + std::abs(mu)));
    }
    if (const auto* tc = std::get_if<TerminalCost>(&p.terminal)) {
      const Vec x = random_vec(p.n, -4, 4);
      const Vec g = tc->grad(x);
      const Vec g_fd = fd::gradient(tc->phi, x);
      CHECK((g - g_fd).cwiseAbs().maxCoeff() <=
            1e-5 * (1.0 + g.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("registry contents and invariants") {
  CHECK(registry_list().size() == 5);
  for (const auto& name : registry_names()) {
    SwitchedOCP p = registry_get(name);
    CHECK(p.name == name);
    CHECK(p.interface.g(p.x0, p.t0) < 0.0);
    CHECK_NOTHROW(p.validate());
  }

  SUBCASE("circle-tiv fields") {
    SwitchedOCP p = registry_get("circle-tiv");
    CHECK(p.n == 2);
    CHECK(p.x0.isZero());
    CHECK(std::get<FixedState>(p.terminal).xf == vec2(2, 2));
    CHECK(p.tf == 2.0);
    CHECK(p.interface.g(vec2(1, 0), 0.0) == doctest::Approx(0.0));
    CHECK(p.interface.kind == InterfaceKind::time_invariant);
  }
  SUBCASE("ex2 terminal cost") {
    SwitchedOCP p = registry_get("ex2-linear-terminal");
    const auto& tc = std::get<TerminalCost>(p.terminal);
    CHECK(tc.phi(vec2(10, 6)) == doctest::Approx(0.0));
    CHECK(tc.phi(vec2(11, 6)) == doctest::Approx(0.5));
    CHECK(terminal_target(p) == vec2(10, 6));
    CHECK(p.interface.g(vec2(3, 4), 1.0) == doctest::Approx(0.0));
  }
  SUBCASE("ex1 fields") {
    SwitchedOCP p = registry_get("ex1-scalar-tv");
    CHECK(p.n == 1);
    CHECK(p.x0(0) == 0.0);
    CHECK(std::get<FixedState>(p.terminal).xf(0) == 2.0);
    CHECK(p.interface.g(vec1(0.5), 0.5) == doctest::Approx(0.0));
    CHECK(p.interface.time_partial(vec1(0.5), 0.5) == doctest::Approx(1.0));
  }
  SUBCASE("ex3 orientation keeps g(x0,t0) negative") {
    SwitchedOCP p = registry_get("ex3-bilinear-tv");
    CHECK(p.interface.g(p.x0, 0.0) < 0.0);
    // the uncontrolled mode-1 trajectory x = e^t meets x = e*t at t = 1
    CHECK(p.interface.g(vec1(std::exp(1.0)), 1.0) == doctest::Approx(0.0));
  }

  CHECK_THROWS_AS(registry_get("no-such-problem"), NotFound);
  try {
    registry_get("no-such-problem");
  } catch (const NotFound& e) {
    CHECK(std::string(e.what()).find("circle-tiv") != std::string::npos);
  }
}

TEST_CASE("validate rejects inconsistent boundary data") {
  SwitchedOCP p = registry_get("circle-tiv");
  SwitchedOCP bad = p;
  bad.tf = bad.t0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = p;
  bad.x0 = vec2(2, 2);  // outside the mode-1 region
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = p;
  bad.terminal = FixedState{vec2(0.1, 0.1)};  // inside the circle
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}
