#pragma once

#include <utility>
#include <vector>

#include "swopt/shooting.hpp"

namespace swopt {

/// Outer Newton iteration on the switching time.
struct GelConfig {
  double tau0 = 0.5;
  double tol = 1e-4;       // stopping tolerance on |F| and |step|
  double delta_tau = 0.1;  // forward-difference perturbation
  double alpha = 1.0;      // Newton step size
  int max_iters = 30;
  BvpFormulation formulation;
  int max_step_halvings = 8;  // backtracking guard on the update
};

enum class GelStop {
  residual_below_tol,
  step_below_tol,
  max_iters,
  inner_failure,
  derivative_vanished,
};

struct GelIteration {
  int k = 0;
  double tau = 0.0;
  double F = 0.0;
  double Fprime = 0.0;
  double step = 0.0;
  int inner_newton_iters = 0;
  double inner_residual = 0.0;
  int halvings = 0;
};

struct GelTrace {
  std::vector<GelIteration> records;
  GelStop stop_reason = GelStop::max_iters;
  /// Newton updates performed (the published iteration count).
  int iterations = 0;
};

struct GelResult {
  TwoPhaseSolution solution;
  GelTrace trace;
  double tau_star = 0.0;
  double J_star = 0.0;
  Vec delta_lambda_empirical;
  Vec delta_lambda_law;
  bool converged = false;
};

/// Solve the inner BVP at fixed tau and return the held-out scalar residual
/// together with the solution. Inner failures are rethrown as InnerFailure.
std::pair<double, TwoPhaseSolution> residual_F(const SwitchedOCP& p, double tau,
                                               const BvpFormulation& form,
                                               const ShootingConfig& cfg,
                                               const BvpGuess& guess);

/// Newton iteration tau_{k+1} = tau_k - alpha F/F' with forward-difference
/// derivative over delta_tau (shrunk by halving, floor 1e-6, whenever
/// tau + delta_tau would leave the horizon). Each inner solve warm-starts
/// from the previous solution. Candidate steps that increase |F| are halved
/// up to max_step_halvings times.
GelResult solve_gel(const SwitchedOCP& p, const GelConfig& cfg,
                    const ShootingConfig& shooting);

inline double absolute_error(double tau, double tau_ref) {
  return std::abs(tau - tau_ref);
}

const char* to_string(GelStop s);

}  // namespace swopt
