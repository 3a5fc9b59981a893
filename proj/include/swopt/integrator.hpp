#pragma once

#include <functional>
#include <span>
#include <vector>

#include "swopt/errors.hpp"
#include "swopt/types.hpp"

namespace swopt {

enum class IntegrationMethod { rk4_fixed, rkf45_adaptive };

struct IntegratorConfig {
  IntegrationMethod method = IntegrationMethod::rkf45_adaptive;
  int fixed_steps_per_unit_time = 200;  // rk4_fixed only, >= 50
  double rel_tol = 1e-8;                // rkf45 only
  double abs_tol = 1e-10;
  long max_steps = 1'000'000;
};

/// Time grid plus state samples on it; times strictly increasing,
/// first = t_a, last = t_b.
struct OdeTrajectory {
  std::vector<double> times;
  std::vector<Vec> values;

  Vec interpolate(double t) const;  // piecewise-linear lookup, clamped
};

/// Right-hand side written into dy (sized like y).
using OdeRhs = std::function<void(const Vec& y, double t, Vec& dy)>;

/// Integrate y' = rhs(y,t) over [t_a, t_b]. When output_grid is non-empty
/// the trajectory is reported on it via cubic Hermite interpolation of the
/// accepted steps (grid points coinciding with step ends are copied
/// exactly); otherwise the natural step grid is returned.
OdeTrajectory integrate(const OdeRhs& rhs, const Vec& y_a, double t_a, double t_b,
                        const IntegratorConfig& cfg,
                        std::span<const double> output_grid = {});

/// Endpoint-only variant, no trajectory storage.
Vec integrate_endpoint(const OdeRhs& rhs, const Vec& y_a, double t_a, double t_b,
                       const IntegratorConfig& cfg);

/// Uniform grid of `count` points over [a, b].
std::vector<double> uniform_grid(double a, double b, int count);

}  // namespace swopt
