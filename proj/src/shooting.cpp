#include "swopt/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swopt/finite_diff.hpp"
#include "swopt/newton.hpp"

namespace swopt {

namespace {

// Stacked (x, lambda) phase ODE with the control eliminated pointwise.
// Evaluates u* once per call and shares it between the state and co-state
// parts.
OdeRhs stacked_phase_rhs(const SwitchedOCP& p, Mode mode) {
  const int n = p.n;
  return [&p, mode, n, x = Vec(n), lam = Vec(n)](const Vec& y, double t,
                                                 Vec& dy) mutable {
    x = y.head(n);
    lam = y.tail(n);
    const Vec u = optimal_control(p, mode, x, lam, t);
    const auto& dyn = p.dynamics(mode);
    const auto& cost = p.cost(mode);
    dy.head(n) = dyn.rhs(x, u, t);
    const Vec gLx =
        cost.grad_x
            ? cost.grad_x(x, u, t)
            : fd::gradient([&](const Vec& xx) { return cost.value(xx, u, t); }, x);
    const Mat fx =
        dyn.jac_x
            ? dyn.jac_x(x, u, t)
            : fd::jacobian([&](const Vec& xx) { return dyn.rhs(xx, u, t); }, x);
    dy.tail(n) = -gLx - fx.transpose() * lam;
  };
}

double simpson(const std::vector<double>& f, double h) {
  const size_t n = f.size();
  double acc = f.front() + f.back();
  for (size_t i = 1; i + 1 < n; ++i) acc += f[i] * ((i % 2) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double phase_cost_simpson(const SwitchedOCP& p, Mode mode, const OdeTrajectory& x,
                          const std::vector<Vec>& u, int stride) {
  const auto& cost = p.cost(mode);
  std::vector<double> f;
  f.reserve(x.times.size() / static_cast<size_t>(stride) + 1);
  for (size_t i = 0; i < x.times.size(); i += static_cast<size_t>(stride))
    f.push_back(cost.value(x.values[i], u[i], x.times[i]));
  const double h = (x.times.back() - x.times.front()) / double(f.size() - 1);
  return simpson(f, h);
}

}  // namespace

// ------------------------------------------------------------ TwoPhaseShooting

TwoPhaseShooting::TwoPhaseShooting(const SwitchedOCP& p, double tau,
                                   BvpFormulation form, ShootingConfig cfg)
    : p_(&p), tau_(tau), form_(form), cfg_(std::move(cfg)) {
  if (!(p.t0 < tau && tau < p.tf))
    throw ContractViolation("solve_two_phase: requires t0 < tau < tf");
  if (cfg_.segments_per_phase < 2)
    throw ContractViolation("segments_per_phase must be >= 2");
}

int TwoPhaseShooting::unknown_dim() const {
  return 4 * p_->n * cfg_.segments_per_phase;
}

int TwoPhaseShooting::residual_dim() const { return unknown_dim(); }

int TwoPhaseShooting::boundary_condition_count() const { return 4 * p_->n; }

double TwoPhaseShooting::node_time(int phase, int s) const {
  const int S = cfg_.segments_per_phase;
  if (phase == 1)
    return p_->t0 + (tau_ - p_->t0) * double(s) / double(S);
  return tau_ + (p_->tf - tau_) * double(s) / double(S);
}

void TwoPhaseShooting::residual(const Vec& z, Vec& r) const {
  const int n = p_->n;
  const int S = cfg_.segments_per_phase;
  const int ph2 = 2 * n * S;  // offset of phase-2 nodes in z
  r.resize(residual_dim());

  const OdeRhs rhs1 = stacked_phase_rhs(*p_, Mode::one);
  const OdeRhs rhs2 = stacked_phase_rhs(*p_, Mode::two);

  Vec y_end;
  int row = 0;
  // Phase-1 segment matching; the last segment's endpoint is kept for the
  // boundary block.
  for (int s = 0; s < S; ++s) {
    const Vec y0 = z.segment(2 * n * s, 2 * n);
    y_end = integrate_endpoint(rhs1, y0, node_time(1, s), node_time(1, s + 1),
                               cfg_.integrator);
    if (s + 1 < S) {
      r.segment(row, 2 * n) = y_end - z.segment(2 * n * (s + 1), 2 * n);
      row += 2 * n;
    }
  }
  const Vec y1_end = y_end;  // (x, lambda) at tau from the left

  for (int s = 0; s < S; ++s) {
    const Vec y0 = z.segment(ph2 + 2 * n * s, 2 * n);
    y_end = integrate_endpoint(rhs2, y0, node_time(2, s), node_time(2, s + 1),
                               cfg_.integrator);
    if (s + 1 < S) {
      r.segment(row, 2 * n) = y_end - z.segment(ph2 + 2 * n * (s + 1), 2 * n);
      row += 2 * n;
    }
  }
  const Vec y2_end = y_end;

  // Boundary block: initial state, terminal condition, state continuity at
  // tau, and the formulation's interior conditions.
  r.segment(row, n) = z.head(n) - p_->x0;
  row += n;

  if (const auto* fs = std::get_if<FixedState>(&p_->terminal)) {
    r.segment(row, n) = y2_end.head(n) - fs->xf;
  } else {
    const auto& tc = std::get<TerminalCost>(p_->terminal);
    const Vec xf = y2_end.head(n);
    const Vec grad = tc.grad ? tc.grad(xf) : fd::gradient(tc.phi, xf);
    r.segment(row, n) = y2_end.tail(n) - grad;
  }
  row += n;

  r.segment(row, n) = z.segment(ph2, n) - y1_end.head(n);
  row += n;

  const Vec x_s = y1_end.head(n);
  const Vec lam_minus = y1_end.tail(n);
  const Vec lam_plus = z.segment(ph2 + n, n);
  const Vec dlam = lam_plus - lam_minus;
  const Vec m = p_->interface.grad_x(x_s, tau_);

  if (form_.held_out == HeldOut::jump_magnitude_residual) {
    // Interface membership plus the n-1 tangential jump components; the
    // magnitude along m stays free and is reported as the outer residual.
    r(row) = p_->interface.g(x_s, tau_);
    ++row;
    if (n > 1) {
      const Mat T = tangent_basis(m);
      r.segment(row, n - 1) = T.transpose() * dlam;
      row += n - 1;
    }
  } else {
    // Full jump law, multiplied through by the denominator so the residual
    // stays smooth when an iterate passes near a tangential configuration.
    const SwitchPointData d =
        make_switch_point_data(*p_, x_s, tau_, lam_minus, lam_plus);
    const double den = d.m.dot(0.5 * (d.f_minus + d.f_plus)) + d.mu;
    const double num = (d.L_plus - d.L_minus) +
                       (0.5 * (d.lambda_minus + d.lambda_plus))
                           .dot(d.f_plus - d.f_minus);
    r.segment(row, n) = dlam * den + num * d.m;
    row += n;
  }
}

Vec TwoPhaseShooting::initial_guess(const BvpGuess& guess) const {
  const int n = p_->n;
  const int S = cfg_.segments_per_phase;
  Vec z(unknown_dim());
  if (guess.strategy == BvpGuess::Strategy::warm_start) {
    if (!guess.previous)
      throw ContractViolation("warm start guess without a previous solution");
    const TwoPhaseSolution& prev = *guess.previous;
    for (int s = 0; s < S; ++s) {
      const double t1 = node_time(1, s);
      z.segment(2 * n * s, n) = prev.x1.interpolate(t1);
      z.segment(2 * n * s + n, n) = prev.lam1.interpolate(t1);
      const double t2 = node_time(2, s);
      z.segment(2 * n * S + 2 * n * s, n) = prev.x2.interpolate(t2);
      z.segment(2 * n * S + 2 * n * s + n, n) = prev.lam2.interpolate(t2);
    }
    return z;
  }
  // Straight line x0 -> terminal target over the whole horizon, lambda = 0.
  const Vec xt = terminal_target(*p_);
  auto x_of_t = [&](double t) -> Vec {
    const double w = (t - p_->t0) / (p_->tf - p_->t0);
    return (1.0 - w) * p_->x0 + w * xt;
  };
  for (int s = 0; s < S; ++s) {
    z.segment(2 * n * s, n) = x_of_t(node_time(1, s));
    z.segment(2 * n * s + n, n).setZero();
    z.segment(2 * n * S + 2 * n * s, n) = x_of_t(node_time(2, s));
    z.segment(2 * n * S + 2 * n * s + n, n).setZero();
  }
  return z;
}

// -------------------------------------------------------------- solve_two_phase

namespace {

// Dense trajectories over one phase by re-integrating each converged
// segment on its slice of a uniform grid.
struct DensePhase {
  OdeTrajectory x, lam;
  std::vector<Vec> u;
};

DensePhase dense_phase(const SwitchedOCP& p, Mode mode, const Vec& z, int offset,
                       const TwoPhaseShooting& sys, int phase,
                       const ShootingConfig& cfg, int points) {
  const int n = p.n;
  const int S = cfg.segments_per_phase;
  const double ta = sys.node_time(phase, 0), tb = sys.node_time(phase, S);
  const std::vector<double> grid = uniform_grid(ta, tb, points);
  const OdeRhs rhs = stacked_phase_rhs(p, mode);

  DensePhase out;
  out.x.times = grid;
  out.lam.times = grid;
  out.x.values.resize(grid.size());
  out.lam.values.resize(grid.size());
  out.u.resize(grid.size());

  size_t gi = 0;
  for (int s = 0; s < S; ++s) {
    const double t0 = sys.node_time(phase, s), t1 = sys.node_time(phase, s + 1);
    // Grid points assigned to this segment: [t0, t1), last segment takes tb.
    std::vector<double> sub;
    size_t gj = gi;
    while (gj < grid.size() && (grid[gj] < t1 || s + 1 == S)) {
      sub.push_back(grid[gj]);
      ++gj;
    }
    if (!sub.empty()) {
      const Vec y0 = z.segment(offset + 2 * n * s, 2 * n);
      OdeTrajectory seg = integrate(rhs, y0, t0, t1, cfg.integrator, sub);
      for (size_t k = 0; k < sub.size(); ++k) {
        out.x.values[gi + k] = seg.values[k].head(n);
        out.lam.values[gi + k] = seg.values[k].tail(n);
      }
      gi = gj;
    }
  }
  for (size_t i = 0; i < grid.size(); ++i)
    out.u[i] = optimal_control(p, mode, out.x.values[i], out.lam.values[i],
                               grid[i]);
  return out;
}

double held_out_value(const SwitchedOCP& p, HeldOut held, const SwitchPointData& d) {
  if (held == HeldOut::interface_residual) return p.interface.g(d.x_s, d.tau);
  const Vec dlam = d.lambda_plus - d.lambda_minus;
  const Vec f_avg = 0.5 * (d.f_minus + d.f_plus);
  const Vec lam_avg = 0.5 * (d.lambda_minus + d.lambda_plus);
  const double num = (d.L_plus - d.L_minus) + lam_avg.dot(d.f_plus - d.f_minus);
  const double den = d.m.dot(f_avg) + d.mu;
  return d.m.dot(dlam) / d.m.squaredNorm() + num / den;
}

}  // namespace

TwoPhaseSolution solve_two_phase(const SwitchedOCP& p, double tau,
                                 const BvpFormulation& form,
                                 const ShootingConfig& cfg,
                                 const BvpGuess& guess) {
  // Cold starts of the law-imposed formulation are staged through the
  // better-conditioned membership formulation (it pins the trajectory to
  // the interface, keeping Newton away from degenerate iterates).
  if (form.held_out == HeldOut::interface_residual &&
      guess.strategy == BvpGuess::Strategy::linear_interpolant) {
    try {
      TwoPhaseSolution stage = solve_two_phase(
          p, tau, BvpFormulation{HeldOut::jump_magnitude_residual}, cfg, guess);
      return solve_two_phase(p, tau, form, cfg, BvpGuess::warm(std::move(stage)));
    } catch (const SolverError&) {
      // fall through to the direct attempt
    }
  }

  TwoPhaseShooting sys(p, tau, form, cfg);

  NewtonOptions nopt;
  nopt.tol = cfg.newton_tol;
  nopt.max_iters = cfg.max_newton_iters;
  nopt.fd_step = cfg.fd_jacobian_step;
  nopt.max_backtracks = cfg.max_backtracks;

  NewtonOutcome res = damped_newton(
      [&sys](const Vec& z, Vec& r) { sys.residual(z, r); },
      sys.initial_guess(guess), nopt);
  if (!res.converged)
    throw BvpDiverged("two-phase BVP Newton did not converge at tau=" +
                          std::to_string(tau),
                      res.iterations, res.residual_norm);

  TwoPhaseSolution sol;
  sol.tau = tau;
  sol.newton_iters = res.iterations;
  sol.residual_norm = res.residual_norm;
  sol.unknowns = res.z;

  const int n = p.n;
  const int ph2 = 2 * n * cfg.segments_per_phase;

  // Dense output, refined until the Simpson quadrature of the cost is grid
  // converged (successive refinements within 1e-8 relative).
  int points = std::max(5, cfg.dense_points_per_phase) | 1;
  for (int round = 0;; ++round) {
    DensePhase ph1 = dense_phase(p, Mode::one, res.z, 0, sys, 1, cfg, points);
    DensePhase ph2d = dense_phase(p, Mode::two, res.z, ph2, sys, 2, cfg, points);
    sol.x1 = std::move(ph1.x);
    sol.lam1 = std::move(ph1.lam);
    sol.u1 = std::move(ph1.u);
    sol.x2 = std::move(ph2d.x);
    sol.lam2 = std::move(ph2d.lam);
    sol.u2 = std::move(ph2d.u);

    const double J_full = phase_cost_simpson(p, Mode::one, sol.x1, sol.u1, 1) +
                          phase_cost_simpson(p, Mode::two, sol.x2, sol.u2, 1);
    const double J_half = phase_cost_simpson(p, Mode::one, sol.x1, sol.u1, 2) +
                          phase_cost_simpson(p, Mode::two, sol.x2, sol.u2, 2);
    if (std::abs(J_full - J_half) < 1e-8 * (1.0 + std::abs(J_full)) || round >= 3) {
      sol.cost_J = J_full;
      break;
    }
    points = 2 * points - 1;
  }
  if (const auto* tc = std::get_if<TerminalCost>(&p.terminal))
    sol.cost_J += tc->phi(sol.x2.values.back());
  if (!std::isfinite(sol.cost_J))
    throw NumericalBlowup("non-finite cost in two-phase solution", tau);

  sol.x_switch = sol.x1.values.back();
  sol.lambda_minus = sol.lam1.values.back();
  sol.lambda_plus = res.z.segment(ph2 + n, n);

  const SwitchPointData d = make_switch_point_data(p, sol.x_switch, tau,
                                                   sol.lambda_minus,
                                                   sol.lambda_plus);
  sol.hamiltonian_gap = hamiltonian_gap(p, d);
  sol.held_out_residual = held_out_value(p, form.held_out, d);
  return sol;
}

double evaluate_cost(const SwitchedOCP& p, const TwoPhaseSolution& sol) {
  if (sol.x1.values.empty() || sol.x2.values.empty())
    throw ContractViolation("evaluate_cost: empty solution trajectories");
  const double J_full =
      phase_cost_simpson(p, Mode::one, sol.x1, sol.u1, 1) +
      phase_cost_simpson(p, Mode::two, sol.x2, sol.u2, 1);
  double J = J_full;
  if (const auto* tc = std::get_if<TerminalCost>(&p.terminal))
    J += tc->phi(sol.x2.values.back());
  if (!std::isfinite(J))
    throw NumericalBlowup("non-finite cost", sol.tau);
  return J;
}

}  // namespace swopt
