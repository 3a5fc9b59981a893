#pragma once

#include "swopt/problem.hpp"
#include "swopt/types.hpp"

namespace swopt {

/// Everything the jump law needs at the crossing: state, controls, co-states,
/// vector fields and stage costs on both sides, and the interface gradient
/// m and time partial mu at (x_s, tau).
struct SwitchPointData {
  Vec x_s;
  double tau = 0.0;
  Vec u_minus, u_plus;
  Vec lambda_minus, lambda_plus;
  Vec f_minus, f_plus;
  double L_minus = 0.0, L_plus = 0.0;
  Vec m;
  double mu = 0.0;
};

/// The co-state discontinuity delta_lambda = -nu * m predicted by the jump
/// law, with the multiplier nu and the transversality denominator
/// m^T <f> + mu. nu_from_minus / nu_from_plus are the two one-sided
/// evaluations of nu,
///   nu_- = (dL + lambda_-^T df) / (m^T f_+ + mu)
///   nu_+ = (dL + lambda_+^T df) / (m^T f_- + mu),
/// which agree with nu at data consistent with the law and serve as a
/// cross-check.
struct CostateJump {
  Vec delta_lambda;
  double magnitude_nu = 0.0;
  double denominator = 0.0;
  double nu_from_minus = 0.0;
  double nu_from_plus = 0.0;
};

/// Time-invariant interface law:
///   delta_lambda = -(dL + <lambda>^T df) m / (m^T <f>).
/// Requires d.mu == 0; throws TangentialCrossing when the denominator
/// vanishes (|den| <= 1e-10 * |m| * (1 + |<f>|)).
CostateJump compute_jump_tiv(const SwitchPointData& d);

/// Time-varying interface law, denominator m^T <f> + mu. Reduces bitwise to
/// compute_jump_tiv when mu = 0.
CostateJump compute_jump_tv(const SwitchPointData& d);

/// H_2(x_s, lambda_+, u_+, tau) - H_1(x_s, lambda_-, u_-, tau). For a
/// time-varying interface the reported diagnostic is the augmented gap
/// dH - nu*mu with nu the magnitude of the actual jump in d along m.
double hamiltonian_gap(const SwitchedOCP& p, const SwitchPointData& d);

/// Evaluate controls, fields, costs, and interface data at a crossing.
SwitchPointData make_switch_point_data(const SwitchedOCP& p, const Vec& x_s,
                                       double tau, const Vec& lambda_minus,
                                       const Vec& lambda_plus);

/// Orthonormal basis of the complement of m (n x (n-1) matrix; empty for
/// n = 1). Columns T satisfy T^T m = 0.
Mat tangent_basis(const Vec& m);

}  // namespace swopt
