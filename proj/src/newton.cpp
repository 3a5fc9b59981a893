#include "swopt/newton.hpp"

#include <cmath>

#include "swopt/errors.hpp"

namespace swopt {

void fd_jacobian(const ResidualFn& f, const Vec& z, const Vec& r0, double step,
                 Mat& J) {
  const Eigen::Index n = z.size();
  J.resize(r0.size(), n);
  Vec zp = z, rp(r0.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = step * (1.0 + std::abs(z(j)));
    zp(j) = z(j) + h;
    f(zp, rp);
    zp(j) = z(j);
    J.col(j) = (rp - r0) / h;
  }
}

NewtonOutcome damped_newton(const ResidualFn& f, Vec z0, const NewtonOptions& opt) {
  NewtonOutcome out;
  out.z = std::move(z0);
  Vec r(out.z.size());
  f(out.z, r);
  out.residual_norm = r.cwiseAbs().maxCoeff();
  Mat J;
  Vec z_try(out.z.size()), r_try(out.z.size());
  for (out.iterations = 0; out.iterations < opt.max_iters; ++out.iterations) {
    if (out.residual_norm <= opt.tol) {
      out.converged = true;
      return out;
    }
    fd_jacobian(f, out.z, r, opt.fd_step, J);
    Eigen::PartialPivLU<Mat> lu(J);
    const double rc = lu.rcond();
    if (!(rc > 1.0 / opt.singular_condition))
      throw SingularJacobian("shooting Jacobian is numerically singular", 1.0 / rc);
    const Vec dz = lu.solve(-r);
    double step = 1.0;
    bool accepted = false;
    for (int back = 0; back <= opt.max_backtracks; ++back) {
      z_try = out.z + step * dz;
      f(z_try, r_try);
      const double rn_try =
          r_try.allFinite() ? r_try.cwiseAbs().maxCoeff()
                            : std::numeric_limits<double>::infinity();
      if (rn_try < out.residual_norm) {
        out.z.swap(z_try);
        r.swap(r_try);
        out.residual_norm = rn_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return out;  // stalled
  }
  out.converged = out.residual_norm <= opt.tol;
  return out;
}

bool chord_iterate(const ResidualFn& f, const Eigen::PartialPivLU<Mat>& lu,
                   Vec& z, Vec& r, double tol, int max_iters) {
  f(z, r);
  double rn = r.allFinite() ? r.cwiseAbs().maxCoeff()
                            : std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    if (rn <= tol) return true;
    if (!std::isfinite(rn)) return false;
    z += lu.solve(-r);
    f(z, r);
    const double rn_next = r.allFinite()
                               ? r.cwiseAbs().maxCoeff()
                               : std::numeric_limits<double>::infinity();
    if (rn_next >= rn && rn_next > tol) return false;  // not contracting
    rn = rn_next;
  }
  return rn <= tol;
}

}  // namespace swopt
