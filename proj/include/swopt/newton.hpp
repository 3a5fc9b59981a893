#pragma once

#include <functional>

#include <Eigen/LU>

#include "swopt/types.hpp"

namespace swopt {

/// Damped Newton on a square nonlinear system with forward-difference
/// Jacobian. Backtracks by halving on residual-norm increase.
struct NewtonOptions {
  double tol = 1e-9;  // inf-norm of the residual
  int max_iters = 60;
  double fd_step = 1e-7;  // column step fd_step * (1 + |z_i|)
  int max_backtracks = 12;
  double singular_condition = 1e14;
};

struct NewtonOutcome {
  Vec z;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<void(const Vec& z, Vec& r)>;

void fd_jacobian(const ResidualFn& f, const Vec& z, const Vec& r0, double step,
                 Mat& J);

/// Throws SingularJacobian when the Jacobian's condition estimate exceeds
/// options.singular_condition; returns converged=false on stall.
NewtonOutcome damped_newton(const ResidualFn& f, Vec z0, const NewtonOptions& opt);

/// Chord iteration reusing a fixed LU factorization; returns true when the
/// residual norm reached tol within max_iters updates. Used by sweep cells
/// where the Jacobian changes slowly.
bool chord_iterate(const ResidualFn& f, const Eigen::PartialPivLU<Mat>& lu,
                   Vec& z, Vec& r, double tol, int max_iters);

}  // namespace swopt
