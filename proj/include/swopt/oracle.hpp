#pragma once

#include <vector>

#include "swopt/jump_law.hpp"
#include "swopt/shooting.hpp"

namespace swopt {

/// Grid search over the switching time (and, for n >= 2, the switching
/// state along the interface), solving each phase as a decoupled
/// fixed-endpoint BVP. Serves as independent ground truth.
struct SweepConfig {
  int tau_count = 400;
  int refinement_rounds = 2;  // each re-grids +-2 cells at 10x resolution
  int interface_param_count = 200;
  int parallel_workers = 0;  // 0 = hardware concurrency
};

struct SweepCell {
  double tau = 0.0;
  double param = 0.0;  // arc-length parameter along the interface slice
  Vec x_s;
  double J = 0.0;
  bool ok = false;
};

struct OracleResult {
  double tau_star = 0.0;
  Vec x_s_star;
  double J_star = 0.0;
  Vec delta_lambda_empirical;
  Vec lambda_minus, lambda_plus;
  std::vector<SweepCell> J_surface;
  std::vector<SweepCell> failures;
  bool interior_minimum = true;
  double final_tau_step = 0.0;
  SwitchPointData switch_data;  // at the minimizer
};

/// One decoupled phase: state/co-state ODEs with u eliminated, x(t_a) = x_a,
/// and either x(t_b) fixed or lambda(t_b) = dphi/dx.
struct PhaseSolution {
  OdeTrajectory x, lam;
  std::vector<Vec> u;
  double J = 0.0;  // integral of the stage cost (terminal cost not included)
  Vec lambda_a, lambda_b;
  int newton_iters = 0;
};

PhaseSolution solve_phase_fixed_endpoints(const SwitchedOCP& p, Mode mode,
                                          const Vec& x_a, double t_a,
                                          const TerminalCondition& end,
                                          double t_b, const ShootingConfig& cfg);

OracleResult sweep(const SwitchedOCP& p, const SweepConfig& cfg,
                   const ShootingConfig& shooting);

/// Points on {x : g(x, t) = 0} inside the sweep bounding box, ordered and
/// approximately arc-length uniform. n = 1 returns the roots; n = 2 traces
/// the level curve by predictor-corrector continuation.
std::vector<Vec> sample_interface(const SwitchedOCP& p, double t, int count);

/// Shooting defaults tuned for the sweep's coarse pass (fewer segments,
/// fixed-step integration). Refinement re-solves tighten these.
ShootingConfig sweep_shooting_defaults();

}  // namespace swopt
