#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "swopt/errors.hpp"
#include "swopt/types.hpp"

namespace swopt {

/// One mode's vector field. Jacobian callbacks are optional; when absent,
/// central finite differences are used.
struct ModeDynamics {
  std::function<Vec(const Vec& x, const Vec& u, double t)> rhs;
  std::function<Mat(const Vec& x, const Vec& u, double t)> jac_x;
  std::function<Mat(const Vec& x, const Vec& u, double t)> jac_u;
};

struct StageCost {
  std::function<double(const Vec& x, const Vec& u, double t)> value;
  std::function<Vec(const Vec& x, const Vec& u, double t)> grad_x;
  std::function<Vec(const Vec& x, const Vec& u, double t)> grad_u;
};

enum class InterfaceKind { time_invariant, time_varying };

/// Scalar level set g(x,t) = 0 separating the two modes, with spatial
/// gradient m = dg/dx and time partial mu = dg/dt. Mode one occupies
/// g < 0, mode two g > 0.
struct SwitchingInterface {
  std::function<double(const Vec& x, double t)> g;
  std::function<Vec(const Vec& x, double t)> grad_x;
  std::function<double(const Vec& x, double t)> dt;  // null means identically 0
  InterfaceKind kind = InterfaceKind::time_invariant;

  double time_partial(const Vec& x, double t) const { return dt ? dt(x, t) : 0.0; }
};

struct FixedState {
  Vec xf;
};

struct TerminalCost {
  std::function<double(const Vec& x)> phi;
  std::function<Vec(const Vec& x)> grad;
};

using TerminalCondition = std::variant<FixedState, TerminalCost>;

/// Closed-form stationary control u*(x, lambda, t, mode).
struct AnalyticControl {
  std::function<Vec(const Vec& x, const Vec& lam, double t, Mode mode)> u_star;
};

/// Solve dH/du = 0 numerically by damped Newton from u = 0.
struct NewtonOnStationarity {};

using ControlLaw = std::variant<AnalyticControl, NewtonOnStationarity>;

/// Full problem statement: two modes, one interface, boundary data, horizon.
struct SwitchedOCP {
  int n = 0;      // state dimension
  int m_dim = 0;  // control dimension
  ModeDynamics mode1, mode2;
  StageCost cost1, cost2;
  SwitchingInterface interface;
  Vec x0;
  double t0 = 0.0, tf = 1.0;
  TerminalCondition terminal;
  ControlLaw control;
  std::string name;
  std::string description;

  const ModeDynamics& dynamics(Mode m) const { return m == Mode::one ? mode1 : mode2; }
  const StageCost& cost(Mode m) const { return m == Mode::one ? cost1 : cost2; }

  /// Throws ContractViolation if t0 >= tf, g(x0,t0) >= 0, or (fixed final
  /// state) g(xf,tf) <= 0.
  void validate() const;
};

/// H = L + lambda^T f for the given mode.
double hamiltonian(const SwitchedOCP& p, Mode mode, const Vec& x, const Vec& lam,
                   const Vec& u, double t);

/// Stationary control at (x, lambda, t). Analytic laws are evaluated
/// directly; NewtonOnStationarity runs damped Newton on dH/du = 0 from u=0
/// and throws StationarityFailure after 50 iterations.
Vec optimal_control(const SwitchedOCP& p, Mode mode, const Vec& x, const Vec& lam,
                    double t);

/// dH/du at (x, u, lambda, t), using analytic gradients where available.
Vec stationarity_residual(const SwitchedOCP& p, Mode mode, const Vec& x,
                          const Vec& u, const Vec& lam, double t);

/// lambda' = -(dL/dx)^T - (df/dx)^T lambda, evaluated at u = u*(x, lambda, t).
Vec costate_rhs(const SwitchedOCP& p, Mode mode, const Vec& x, const Vec& lam,
                double t);

/// Minimizer of the terminal cost for TerminalCost problems (used for
/// initial guesses and sweep bounding boxes); FixedState returns xf.
Vec terminal_target(const SwitchedOCP& p);

}  // namespace swopt
