#pragma once

#include <string>
#include <variant>
#include <vector>

#include "swopt/problem.hpp"

namespace swopt {

// ---------------------------------------------------------------- interfaces

struct LinearInterfaceSpec {
  Vec m;
  double mu = 0.0;
  double c = 0.0;
};

/// g(x) = |x|^2 - r^2.
struct CircleInterfaceSpec {
  double radius = 1.0;
};

using InterfaceSpec = std::variant<LinearInterfaceSpec, CircleInterfaceSpec>;

SwitchingInterface make_interface(const InterfaceSpec& spec);

// ------------------------------------------------------------------ families
// Parameterized problem builders. The registry instantiates them with the
// canonical data; problem files may override the numeric fields.

/// x1' = gain*x2, x2' = u per mode; L_i = w_i u^2; fixed endpoints.
struct TwoGainDoubleIntegratorParams {
  double gain1 = 2.0, gain2 = 1.0;
  double w1 = 0.125, w2 = 0.5;
  Vec x0, xf;
  double t0 = 0.0, tf = 2.0;
  InterfaceSpec interface;
};
SwitchedOCP make_two_gain_double_integrator(const TwoGainDoubleIntegratorParams&);

/// Scalar x' = t x + u before, x' = u after; L_i = w_i (x^2 + u^2).
struct ScalarTimeVaryingParams {
  double w1 = 0.5, w2 = 0.125;
  double x0 = 0.0, xf = 2.0;
  double t0 = 0.0, tf = 2.0;
  InterfaceSpec interface;
};
SwitchedOCP make_scalar_time_varying(const ScalarTimeVaryingParams&);

/// x' = A_i x + B u, L = 1/2 u^2, quadratic terminal cost
/// 1/2 sum w_j (x_j - target_j)^2.
struct LinearTerminalParams {
  Mat A1, A2;
  Vec B;
  Vec x0, target, weights;
  double t0 = 0.0, tf = 2.0;
  InterfaceSpec interface;
};
SwitchedOCP make_linear_terminal(const LinearTerminalParams&);

/// Scalar bilinear x' = x + u x before, x' = -x + u x after; L = 1/2 u^2.
struct ScalarBilinearParams {
  double x0 = 1.0, xf = 1.0;
  double t0 = 0.0, tf = 2.0;
  InterfaceSpec interface;
};
SwitchedOCP make_scalar_bilinear(const ScalarBilinearParams&);

// ------------------------------------------------------------------ registry

struct RegistryEntry {
  std::string name;
  std::string description;
};

/// The five built-in benchmark problems:
///   circle-tiv, linear-tv, ex1-scalar-tv, ex2-linear-terminal, ex3-bilinear-tv.
/// Throws NotFound (listing the valid names) otherwise.
SwitchedOCP registry_get(const std::string& name);

const std::vector<RegistryEntry>& registry_list();

}  // namespace swopt
