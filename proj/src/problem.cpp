#include "swopt/problem.hpp"

#include <cmath>

#include <Eigen/LU>

#include "swopt/finite_diff.hpp"

namespace swopt {

namespace {

void check_dims(const SwitchedOCP& p, const Vec& x, const Vec& lam) {
  if (x.size() != p.n || lam.size() != p.n)
    throw ContractViolation("state/co-state dimension does not match problem");
}

}  // namespace

void SwitchedOCP::validate() const {
  if (!(t0 < tf)) throw ContractViolation(name + ": requires t0 < tf");
  if (x0.size() != n) throw ContractViolation(name + ": x0 dimension mismatch");
  if (interface.g(x0, t0) >= 0.0)
    throw ContractViolation(name + ": initial state must satisfy g(x0,t0) < 0");
  if (const auto* fs = std::get_if<FixedState>(&terminal)) {
    if (fs->xf.size() != n)
      throw ContractViolation(name + ": xf dimension mismatch");
    if (interface.g(fs->xf, tf) <= 0.0)
      throw ContractViolation(name + ": final state must satisfy g(xf,tf) > 0");
  }
}

double hamiltonian(const SwitchedOCP& p, Mode mode, const Vec& x, const Vec& lam,
                   const Vec& u, double t) {
  check_dims(p, x, lam);
  if (u.size() != p.m_dim)
    throw ContractViolation("control dimension does not match problem");
  return p.cost(mode).value(x, u, t) + lam.dot(p.dynamics(mode).rhs(x, u, t));
}

Vec stationarity_residual(const SwitchedOCP& p, Mode mode, const Vec& x,
                          const Vec& u, const Vec& lam, double t) {
  const auto& dyn = p.dynamics(mode);
  const auto& cost = p.cost(mode);
  Vec gLu = cost.grad_u
                ? cost.grad_u(x, u, t)
                : fd::gradient([&](const Vec& uu) { return cost.value(x, uu, t); }, u);
  Mat fu = dyn.jac_u
               ? dyn.jac_u(x, u, t)
               : fd::jacobian([&](const Vec& uu) { return dyn.rhs(x, uu, t); }, u);
  return gLu + fu.transpose() * lam;
}

Vec optimal_control(const SwitchedOCP& p, Mode mode, const Vec& x, const Vec& lam,
                    double t) {
  check_dims(p, x, lam);
  if (const auto* a = std::get_if<AnalyticControl>(&p.control))
    return a->u_star(x, lam, t, mode);

  // Damped Newton on dH/du = 0 from u = 0.
  Vec u = Vec::Zero(p.m_dim);
  Vec r = stationarity_residual(p, mode, x, u, lam, t);
  double rn = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  for (int it = 0; it < 50; ++it) {
    if (rn <= 1e-10) return u;
    Mat H = fd::jacobian(
        [&](const Vec& uu) { return stationarity_residual(p, mode, x, uu, lam, t); },
        u);
    Vec du = H.fullPivLu().solve(-r);
    double step = 1.0;
    for (int back = 0; back < 30; ++back) {
      Vec u_try = u + step * du;
      Vec r_try = stationarity_residual(p, mode, x, u_try, lam, t);
      const double rn_try = r_try.cwiseAbs().maxCoeff();
      if (rn_try < rn || !std::isfinite(rn)) {
        u = std::move(u_try);
        r = std::move(r_try);
        rn = rn_try;
        break;
      }
      step *= 0.5;
      if (back == 29) {
        u += step * du;
        r = stationarity_residual(p, mode, x, u, lam, t);
        rn = r.cwiseAbs().maxCoeff();
      }
    }
  }
  if (rn <= 1e-10) return u;
  throw StationarityFailure("stationarity Newton did not converge in 50 iterations",
                            u, rn);
}

Vec costate_rhs(const SwitchedOCP& p, Mode mode, const Vec& x, const Vec& lam,
                double t) {
  const Vec u = optimal_control(p, mode, x, lam, t);
  const auto& dyn = p.dynamics(mode);
  const auto& cost = p.cost(mode);
  Vec gLx = cost.grad_x
                ? cost.grad_x(x, u, t)
                : fd::gradient([&](const Vec& xx) { return cost.value(xx, u, t); }, x);
  Mat fx = dyn.jac_x
               ? dyn.jac_x(x, u, t)
               : fd::jacobian([&](const Vec& xx) { return dyn.rhs(xx, u, t); }, x);
  return -gLx - fx.transpose() * lam;
}

Vec terminal_target(const SwitchedOCP& p) {
  if (const auto* fs = std::get_if<FixedState>(&p.terminal)) return fs->xf;
  const auto& tc = std::get<TerminalCost>(p.terminal);
  // Damped Newton on grad phi = 0 from x0; quadratic costs converge in one step.
  Vec x = p.x0;
  for (int it = 0; it < 50; ++it) {
    Vec g = tc.grad ? tc.grad(x) : fd::gradient(tc.phi, x);
    if (g.cwiseAbs().maxCoeff() <= 1e-9) return x;
    Mat H = fd::jacobian(
        [&](const Vec& xx) { return tc.grad ? tc.grad(xx) : fd::gradient(tc.phi, xx); },
        x);
    Vec dx = H.fullPivLu().solve(-g);
    if (!dx.allFinite()) break;
    x += dx;
  }
  return x;
}

}  // namespace swopt
