#pragma once

#include <functional>

#include "swopt/types.hpp"

namespace swopt::fd {

/// Step used for central differences: 1e-6 * max(1, |x|_inf).
double central_step(const Vec& x);

Vec gradient(const std::function<double(const Vec&)>& f, const Vec& x);
Mat jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x);

/// d/dt of a scalar function of time, central difference with step 1e-6*max(1,|t|).
double time_derivative(const std::function<double(double)>& f, double t);

}  // namespace swopt::fd
