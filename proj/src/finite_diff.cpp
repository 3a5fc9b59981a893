#include "swopt/finite_diff.hpp"

#include <algorithm>
#include <cmath>

namespace swopt::fd {

double central_step(const Vec& x) {
  double scale = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  return 1e-6 * std::max(1.0, scale);
}

Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  const double h = central_step(x);
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
  const double h = central_step(x);
  Vec xp = x;
  Mat J;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const Vec fp = f(xp);
    xp(i) = x(i) - h;
    const Vec fm = f(xp);
    xp(i) = x(i);
    if (J.size() == 0) J.resize(fp.size(), x.size());
    J.col(i) = (fp - fm) / (2.0 * h);
  }
  return J;
}

double time_derivative(const std::function<double(double)>& f, double t) {
  const double h = 1e-6 * std::max(1.0, std::abs(t));
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

}  // namespace swopt::fd
