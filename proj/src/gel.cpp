#include "swopt/gel.hpp"

#include <algorithm>
#include <cmath>

namespace swopt {

const char* to_string(GelStop s) {
  switch (s) {
    case GelStop::residual_below_tol: return "ResidualBelowTol";
    case GelStop::step_below_tol: return "StepBelowTol";
    case GelStop::max_iters: return "MaxIters";
    case GelStop::inner_failure: return "InnerFailure";
    case GelStop::derivative_vanished: return "DerivativeVanished";
  }
  return "?";
}

std::pair<double, TwoPhaseSolution> residual_F(const SwitchedOCP& p, double tau,
                                               const BvpFormulation& form,
                                               const ShootingConfig& cfg,
                                               const BvpGuess& guess) {
  try {
    TwoPhaseSolution sol = solve_two_phase(p, tau, form, cfg, guess);
    return {sol.held_out_residual, std::move(sol)};
  } catch (const ContractViolation&) {
    throw;
  } catch (const SolverError& e) {
    throw InnerFailure(std::string("inner BVP failed at tau=") +
                       std::to_string(tau) + ": " + e.what());
  }
}

namespace {

GelResult finish(const SwitchedOCP& p, TwoPhaseSolution sol, GelTrace trace,
                 GelStop stop) {
  GelResult out;
  trace.stop_reason = stop;
  out.tau_star = sol.tau;
  out.J_star = sol.cost_J;
  out.delta_lambda_empirical = sol.lambda_plus - sol.lambda_minus;
  const SwitchPointData d = make_switch_point_data(
      p, sol.x_switch, sol.tau, sol.lambda_minus, sol.lambda_plus);
  out.delta_lambda_law = compute_jump_tv(d).delta_lambda;
  out.converged = stop == GelStop::residual_below_tol ||
                  stop == GelStop::step_below_tol;
  out.solution = std::move(sol);
  out.trace = std::move(trace);
  return out;
}

}  // namespace

GelResult solve_gel(const SwitchedOCP& p, const GelConfig& cfg,
                    const ShootingConfig& shooting) {
  if (!(cfg.tol > 0) || !(cfg.delta_tau > 0) || !(cfg.alpha > 0) ||
      cfg.alpha > 1.0)
    throw ContractViolation("solve_gel: invalid configuration");

  const double eps = 1e-3 * (p.tf - p.t0);
  const double lo = p.t0 + eps, hi = p.tf - eps;
  double tau = std::clamp(cfg.tau0, lo, hi);

  GelTrace trace;
  double F;
  TwoPhaseSolution sol;
  {
    auto [F0, s0] = residual_F(p, tau, cfg.formulation, shooting, BvpGuess::linear());
    F = F0;
    sol = std::move(s0);
  }

  for (int k = 0; k < cfg.max_iters; ++k) {
    GelIteration rec;
    rec.k = k;
    rec.tau = tau;
    rec.F = F;
    rec.inner_newton_iters = sol.newton_iters;
    rec.inner_residual = sol.residual_norm;

    if (std::abs(F) < cfg.tol) {
      trace.records.push_back(rec);
      trace.iterations = k;
      return finish(p, std::move(sol), std::move(trace),
                    GelStop::residual_below_tol);
    }

    double dt = cfg.delta_tau;
    while (tau + dt >= p.tf && dt > 1e-6) dt *= 0.5;

    double F_pert;
    try {
      F_pert = residual_F(p, tau + dt, cfg.formulation, shooting,
                          BvpGuess::warm(sol))
                   .first;
    } catch (const InnerFailure&) {
      trace.records.push_back(rec);
      trace.iterations = k;
      return finish(p, std::move(sol), std::move(trace), GelStop::inner_failure);
    }

    const double Fprime = (F_pert - F) / dt;
    rec.Fprime = Fprime;
    if (std::abs(Fprime) < 1e-14) {
      trace.records.push_back(rec);
      trace.iterations = k;
      return finish(p, std::move(sol), std::move(trace),
                    GelStop::derivative_vanished);
    }

    double step = -cfg.alpha * F / Fprime;
    double tau_next = 0.0, F_next = 0.0;
    TwoPhaseSolution sol_next;
    bool accepted = false;
    int halvings = 0;
    for (; halvings <= cfg.max_step_halvings; ++halvings) {
      tau_next = std::clamp(tau + step, lo, hi);
      try {
        auto [Fc, sc] = residual_F(p, tau_next, cfg.formulation, shooting,
                                   BvpGuess::warm(sol));
        if (std::abs(Fc) < std::abs(F)) {
          F_next = Fc;
          sol_next = std::move(sc);
          accepted = true;
          break;
        }
      } catch (const InnerFailure&) {
        // treat as a failed candidate and shorten the step
      }
      step *= 0.5;
    }
    rec.step = tau_next - tau;
    rec.halvings = halvings;
    trace.records.push_back(rec);

    if (!accepted) {
      trace.iterations = k;
      return finish(p, std::move(sol), std::move(trace), GelStop::max_iters);
    }

    trace.iterations = k + 1;
    const double moved = std::abs(tau_next - tau);
    tau = tau_next;
    F = F_next;
    sol = std::move(sol_next);
    if (moved < cfg.tol) {
      GelIteration last;
      last.k = k + 1;
      last.tau = tau;
      last.F = F;
      last.inner_newton_iters = sol.newton_iters;
      last.inner_residual = sol.residual_norm;
      trace.records.push_back(last);
      return finish(p, std::move(sol), std::move(trace), GelStop::step_below_tol);
    }
  }
  return finish(p, std::move(sol), std::move(trace), GelStop::max_iters);
}

}  // namespace swopt
