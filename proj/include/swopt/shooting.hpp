#pragma once

#include <optional>

#include "swopt/integrator.hpp"
#include "swopt/jump_law.hpp"
#include "swopt/problem.hpp"

namespace swopt {

/// Which scalar condition is excluded from the inner fixed-tau BVP and
/// returned to the outer switching-time iteration.
///
/// jump_magnitude_residual (default): the BVP imposes interface membership
/// g(x(tau),tau) = 0 plus the n-1 tangential components of delta_lambda; the
/// held-out scalar is the jump-magnitude mismatch along m,
///   F = m^T dlam / (m^T m) + (dL + <lam>^T df) / (m^T <f> + mu).
///
/// interface_residual: the BVP imposes the full n-component jump law; the
/// held-out scalar is F = g(x(tau), tau).
enum class HeldOut { interface_residual, jump_magnitude_residual };

struct BvpFormulation {
  HeldOut held_out = HeldOut::jump_magnitude_residual;
};

struct ShootingConfig {
  int segments_per_phase = 8;   // >= 2
  double newton_tol = 1e-9;     // on the residual inf-norm
  int max_newton_iters = 60;
  double fd_jacobian_step = 1e-7;  // column step 1e-7 * (1 + |z_i|)
  int max_backtracks = 12;         // halvings, accept on norm decrease
  IntegratorConfig integrator;
  int dense_points_per_phase = 401;  // odd; dense output resolution
};

/// Converged two-phase trajectory at a fixed switching time.
/// hamiltonian_gap is the augmented gap for time-varying interfaces.
struct TwoPhaseSolution {
  double tau = 0.0;
  OdeTrajectory x1, lam1, x2, lam2;
  std::vector<Vec> u1, u2;
  Vec x_switch, lambda_minus, lambda_plus;
  double cost_J = 0.0;
  double hamiltonian_gap = 0.0;
  int newton_iters = 0;
  double residual_norm = 0.0;
  double held_out_residual = 0.0;
  Vec unknowns;  // converged shooting vector, reused for warm starts
};

struct BvpGuess {
  enum class Strategy { linear_interpolant, warm_start };
  Strategy strategy = Strategy::linear_interpolant;
  std::optional<TwoPhaseSolution> previous;  // required for warm_start

  static BvpGuess linear() { return {}; }
  static BvpGuess warm(TwoPhaseSolution prev) {
    return {Strategy::warm_start, std::move(prev)};
  }
};

/// Multiple-shooting residual assembly for the two-phase BVP at fixed tau.
/// Unknowns are the (x, lambda) node values at segment starts of both
/// phases; conditions are segment matching plus the 4n boundary block
/// (initial state, terminal condition, state continuity at tau, and the
/// formulation's interior conditions).
class TwoPhaseShooting {
 public:
  TwoPhaseShooting(const SwitchedOCP& p, double tau, BvpFormulation form,
                   ShootingConfig cfg);

  int unknown_dim() const;
  int residual_dim() const;
  int boundary_condition_count() const;

  void residual(const Vec& z, Vec& r) const;

  Vec initial_guess(const BvpGuess& guess) const;

  /// Node time of segment s (0-based) within phase 1 or 2.
  double node_time(int phase, int s) const;

  const SwitchedOCP& problem() const { return *p_; }
  double tau() const { return tau_; }

 private:
  const SwitchedOCP* p_;
  double tau_;
  BvpFormulation form_;
  ShootingConfig cfg_;
};

/// Solve the two-phase BVP at fixed tau. All imposed conditions are
/// satisfied to cfg.newton_tol; the held-out scalar residual is reported in
/// the solution, not enforced. Throws BvpDiverged / SingularJacobian.
TwoPhaseSolution solve_two_phase(const SwitchedOCP& p, double tau,
                                 const BvpFormulation& form,
                                 const ShootingConfig& cfg,
                                 const BvpGuess& guess);

/// Composite Simpson quadrature of the stage cost over both phase grids
/// plus the terminal cost. The grids must be uniform with odd point count.
double evaluate_cost(const SwitchedOCP& p, const TwoPhaseSolution& sol);

}  // namespace swopt
