#include "swopt/jump_law.hpp"

#include <cmath>

#include <Eigen/Householder>
#include <Eigen/QR>

#include "swopt/errors.hpp"

namespace swopt {

namespace {

CostateJump jump_impl(const SwitchPointData& d) {
  if (d.m.cwiseAbs().maxCoeff() <= 1e-12)
    throw ContractViolation("jump law: interface gradient m is zero");
  const Vec df = d.f_plus - d.f_minus;
  const Vec f_avg = 0.5 * (d.f_plus + d.f_minus);
  const Vec lam_avg = 0.5 * (d.lambda_plus + d.lambda_minus);
  const double dL = d.L_plus - d.L_minus;

  const double den = d.m.dot(f_avg) + d.mu;
  const double scale = d.m.norm() * (1.0 + f_avg.norm());
  if (std::abs(den) <= 1e-10 * scale)
    throw TangentialCrossing(
        "jump law denominator m^T<f> + mu vanishes: crossing is tangential", den);

  CostateJump out;
  out.denominator = den;
  out.magnitude_nu = (dL + lam_avg.dot(df)) / den;
  out.delta_lambda = -out.magnitude_nu * d.m;
  // One-sided evaluations; equal to magnitude_nu at law-consistent data.
  out.nu_from_minus = (dL + d.lambda_minus.dot(df)) / (d.m.dot(d.f_plus) + d.mu);
  out.nu_from_plus = (dL + d.lambda_plus.dot(df)) / (d.m.dot(d.f_minus) + d.mu);
  return out;
}

}  // namespace

CostateJump compute_jump_tv(const SwitchPointData& d) { return jump_impl(d); }

CostateJump compute_jump_tiv(const SwitchPointData& d) {
  if (d.mu != 0.0)
    throw ContractViolation(
        "compute_jump_tiv: time-invariant law requires mu = 0");
  return jump_impl(d);
}

double hamiltonian_gap(const SwitchedOCP& p, const SwitchPointData& d) {
  const double h1 = hamiltonian(p, Mode::one, d.x_s, d.lambda_minus, d.u_minus, d.tau);
  const double h2 = hamiltonian(p, Mode::two, d.x_s, d.lambda_plus, d.u_plus, d.tau);
  if (d.mu == 0.0) return h2 - h1;
  // Augmented gap: dH + dlambda_t with dlambda_t = -nu*mu, nu taken from the
  // actual jump's component along m.
  const Vec dlam = d.lambda_plus - d.lambda_minus;
  const double nu = -d.m.dot(dlam) / d.m.squaredNorm();
  return (h2 - h1) - nu * d.mu;
}

SwitchPointData make_switch_point_data(const SwitchedOCP& p, const Vec& x_s,
                                       double tau, const Vec& lambda_minus,
                                       const Vec& lambda_plus) {
  SwitchPointData d;
  d.x_s = x_s;
  d.tau = tau;
  d.lambda_minus = lambda_minus;
  d.lambda_plus = lambda_plus;
  d.u_minus = optimal_control(p, Mode::one, x_s, lambda_minus, tau);
  d.u_plus = optimal_control(p, Mode::two, x_s, lambda_plus, tau);
  d.f_minus = p.mode1.rhs(x_s, d.u_minus, tau);
  d.f_plus = p.mode2.rhs(x_s, d.u_plus, tau);
  d.L_minus = p.cost1.value(x_s, d.u_minus, tau);
  d.L_plus = p.cost2.value(x_s, d.u_plus, tau);
  d.m = p.interface.grad_x(x_s, tau);
  d.mu = p.interface.time_partial(x_s, tau);
  return d;
}

Mat tangent_basis(const Vec& m) {
  const Eigen::Index n = m.size();
  if (n <= 1) return Mat(n, 0);
  // Columns 2..n of a Householder reflector taking e1 to m/|m|.
  Vec v = m / m.norm();
  Vec w = v;
  w(0) += (v(0) >= 0 ? 1.0 : -1.0);
  w.normalize();
  Mat H = Mat::Identity(n, n) - 2.0 * w * w.transpose();
  return H.rightCols(n - 1);
}

}  // namespace swopt
