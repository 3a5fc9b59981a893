#include "swopt/registry.hpp"

#include <cmath>

#include "swopt/errors.hpp"

namespace swopt {

SwitchingInterface make_interface(const InterfaceSpec& spec) {
  SwitchingInterface s;
  if (const auto* lin = std::get_if<LinearInterfaceSpec>(&spec)) {
    const Vec m = lin->m;
    const double mu = lin->mu, c = lin->c;
    s.g = [m, mu, c](const Vec& x, double t) { return m.dot(x) + mu * t + c; };
    s.grad_x = [m](const Vec&, double) { return m; };
    s.dt = [mu](const Vec&, double) { return mu; };
    s.kind = (mu == 0.0) ? InterfaceKind::time_invariant
                         : InterfaceKind::time_varying;
  } else {
    const double r2 = std::get<CircleInterfaceSpec>(spec).radius *
                      std::get<CircleInterfaceSpec>(spec).radius;
    s.g = [r2](const Vec& x, double) { return x.squaredNorm() - r2; };
    s.grad_x = [](const Vec& x, double) { return Vec(2.0 * x); };
    s.dt = [](const Vec&, double) { return 0.0; };
    s.kind = InterfaceKind::time_invariant;
  }
  return s;
}

namespace {

ModeDynamics gain_integrator_dynamics(double gain) {
  ModeDynamics d;
  d.rhs = [gain](const Vec& x, const Vec& u, double) {
    Vec f(2);
    f << gain * x(1), u(0);
    return f;
  };
  d.jac_x = [gain](const Vec&, const Vec&, double) {
    Mat J = Mat::Zero(2, 2);
    J(0, 1) = gain;
    return J;
  };
  d.jac_u = [](const Vec&, const Vec&, double) {
    Mat J(2, 1);
    J << 0.0, 1.0;
    return J;
  };
  return d;
}

StageCost quadratic_control_cost(double w, int m_dim) {
  StageCost c;
  c.value = [w](const Vec&, const Vec& u, double) { return w * u.squaredNorm(); };
  c.grad_x = [](const Vec& x, const Vec&, double) { return Vec(Vec::Zero(x.size())); };
  c.grad_u = [w](const Vec&, const Vec& u, double) { return Vec(2.0 * w * u); };
  (void)m_dim;
  return c;
}

}  // namespace

SwitchedOCP make_two_gain_double_integrator(
    const TwoGainDoubleIntegratorParams& prm) {
  SwitchedOCP p;
  p.n = 2;
  p.m_dim = 1;
  p.mode1 = gain_integrator_dynamics(prm.gain1);
  p.mode2 = gain_integrator_dynamics(prm.gain2);
  p.cost1 = quadratic_control_cost(prm.w1, 1);
  p.cost2 = quadratic_control_cost(prm.w2, 1);
  p.interface = make_interface(prm.interface);
  p.x0 = prm.x0;
  p.t0 = prm.t0;
  p.tf = prm.tf;
  p.terminal = FixedState{prm.xf};
  const double w1 = prm.w1, w2 = prm.w2;
  p.control = AnalyticControl{[w1, w2](const Vec&, const Vec& lam, double, Mode m) {
    const double w = (m == Mode::one) ? w1 : w2;
    Vec u(1);
    u << -lam(1) / (2.0 * w);
    return u;
  }};
  return p;
}

SwitchedOCP make_scalar_time_varying(const ScalarTimeVaryingParams& prm) {
  SwitchedOCP p;
  p.n = 1;
  p.m_dim = 1;
  p.mode1.rhs = [](const Vec& x, const Vec& u, double t) {
    return Vec(Vec::Constant(1, t * x(0) + u(0)));
  };
  p.mode1.jac_x = [](const Vec&, const Vec&, double t) {
    return Mat(Mat::Constant(1, 1, t));
  };
  p.mode1.jac_u = [](const Vec&, const Vec&, double) {
    return Mat(Mat::Constant(1, 1, 1.0));
  };
  p.mode2.rhs = [](const Vec&, const Vec& u, double) { return Vec(u); };
  p.mode2.jac_x = [](const Vec&, const Vec&, double) {
    return Mat(Mat::Zero(1, 1));
  };
  p.mode2.jac_u = [](const Vec&, const Vec&, double) {
    return Mat(Mat::Constant(1, 1, 1.0));
  };
  auto state_control_cost = [](double w) {
    StageCost c;
    c.value = [w](const Vec& x, const Vec& u, double) {
      return w * (x.squaredNorm() + u.squaredNorm());
    };
    c.grad_x = [w](const Vec& x, const Vec&, double) { return Vec(2.0 * w * x); };
    c.grad_u = [w](const Vec&, const Vec& u, double) { return Vec(2.0 * w * u); };
    return c;
  };
  p.cost1 = state_control_cost(prm.w1);
  p.cost2 = state_control_cost(prm.w2);
  p.interface = make_interface(prm.interface);
  p.x0 = Vec::Constant(1, prm.x0);
  p.t0 = prm.t0;
  p.tf = prm.tf;
  p.terminal = FixedState{Vec::Constant(1, prm.xf)};
  const double w1 = prm.w1, w2 = prm.w2;
  p.control = AnalyticControl{[w1, w2](const Vec&, const Vec& lam, double, Mode m) {
    const double w = (m == Mode::one) ? w1 : w2;
    return Vec(-lam / (2.0 * w));
  }};
  return p;
}

SwitchedOCP make_linear_terminal(const LinearTerminalParams& prm) {
  SwitchedOCP p;
  p.n = static_cast<int>(prm.A1.rows());
  p.m_dim = 1;
  auto linear_dynamics = [](const Mat& A, const Vec& B) {
    ModeDynamics d;
    d.rhs = [A, B](const Vec& x, const Vec& u, double) { return Vec(A * x + B * u(0)); };
    d.jac_x = [A](const Vec&, const Vec&, double) { return A; };
    d.jac_u = [B](const Vec&, const Vec&, double) { return Mat(B); };
    return d;
  };
  p.mode1 = linear_dynamics(prm.A1, prm.B);
  p.mode2 = linear_dynamics(prm.A2, prm.B);
  p.cost1 = quadratic_control_cost(0.5, 1);
  p.cost2 = quadratic_control_cost(0.5, 1);
  p.interface = make_interface(prm.interface);
  p.x0 = prm.x0;
  p.t0 = prm.t0;
  p.tf = prm.tf;
  const Vec target = prm.target, weights = prm.weights;
  TerminalCost tc;
  tc.phi = [target, weights](const Vec& x) {
    return 0.5 * (weights.array() * (x - target).array().square()).sum();
  };
  tc.grad = [target, weights](const Vec& x) {
    return Vec(weights.array() * (x - target).array());
  };
  p.terminal = tc;
  const Vec B = prm.B;
  p.control = AnalyticControl{[B](const Vec&, const Vec& lam, double, Mode) {
    return Vec(Vec::Constant(1, -B.dot(lam)));
  }};
  return p;
}

SwitchedOCP make_scalar_bilinear(const ScalarBilinearParams& prm) {
  SwitchedOCP p;
  p.n = 1;
  p.m_dim = 1;
  p.mode1.rhs = [](const Vec& x, const Vec& u, double) {
    return Vec(Vec::Constant(1, x(0) * (1.0 + u(0))));
  };
  p.mode1.jac_x = [](const Vec&, const Vec& u, double) {
    return Mat(Mat::Constant(1, 1, 1.0 + u(0)));
  };
  p.mode1.jac_u = [](const Vec& x, const Vec&, double) {
    return Mat(Mat::Constant(1, 1, x(0)));
  };
  p.mode2.rhs = [](const Vec& x, const Vec& u, double) {
    return Vec(Vec::Constant(1, x(0) * (u(0) - 1.0)));
  };
  p.mode2.jac_x = [](const Vec&, const Vec& u, double) {
    return Mat(Mat::Constant(1, 1, u(0) - 1.0));
  };
  p.mode2.jac_u = [](const Vec& x, const Vec&, double) {
    return Mat(Mat::Constant(1, 1, x(0)));
  };
  p.cost1 = quadratic_control_cost(0.5, 1);
  p.cost2 = quadratic_control_cost(0.5, 1);
  p.interface = make_interface(prm.interface);
  p.x0 = Vec::Constant(1, prm.x0);
  p.t0 = prm.t0;
  p.tf = prm.tf;
  p.terminal = FixedState{Vec::Constant(1, prm.xf)};
  p.control = AnalyticControl{[](const Vec& x, const Vec& lam, double, Mode) {
    return Vec(-lam(0) * x);
  }};
  return p;
}

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

SwitchedOCP build_circle_tiv() {
  TwoGainDoubleIntegratorParams prm;
  prm.gain1 = 2.0;
  prm.gain2 = 1.0;
  prm.w1 = 0.125;
  prm.w2 = 0.5;
  prm.x0 = vec2(0, 0);
  prm.xf = vec2(2, 2);
  prm.interface = CircleInterfaceSpec{1.0};
  SwitchedOCP p = make_two_gain_double_integrator(prm);
  p.name = "circle-tiv";
  p.description =
      "second-order two-gain integrator, unit-circle time-invariant interface";
  return p;
}

SwitchedOCP build_linear_tv() {
  TwoGainDoubleIntegratorParams prm;
  prm.gain1 = 2.0;
  prm.gain2 = 1.0;
  prm.w1 = 1.0;
  prm.w2 = 0.5;
  prm.x0 = vec2(0, 0);
  prm.xf = vec2(2, 2);
  prm.interface = LinearInterfaceSpec{vec2(1, 1), 1.0, -1.0};
  SwitchedOCP p = make_two_gain_double_integrator(prm);
  p.name = "linear-tv";
  p.description =
      "second-order two-gain integrator, moving linear interface x1+x2+t=1";
  return p;
}

SwitchedOCP build_ex1() {
  ScalarTimeVaryingParams prm;
  prm.w1 = 0.5;
  prm.w2 = 0.125;
  prm.x0 = 0.0;
  prm.xf = 2.0;
  prm.interface = LinearInterfaceSpec{Vec::Constant(1, 1.0), 1.0, -1.0};
  SwitchedOCP p = make_scalar_time_varying(prm);
  p.name = "ex1-scalar-tv";
  p.description = "scalar time-varying drift, moving linear interface x+t=1";
  return p;
}

SwitchedOCP build_ex2() {
  LinearTerminalParams prm;
  prm.A1 = Mat{{1.5, 0.0}, {0.0, 1.0}};
  prm.A2 = Mat{{0.5, 0.866}, {0.866, -0.5}};
  prm.B = vec2(1, 1);
  prm.x0 = vec2(1, 1);
  prm.target = vec2(10, 6);
  prm.weights = vec2(1, 1);
  prm.interface = LinearInterfaceSpec{vec2(1, 1), 0.0, -7.0};
  SwitchedOCP p = make_linear_terminal(prm);
  p.name = "ex2-linear-terminal";
  p.description =
      "two coupled linear modes, quadratic terminal cost, interface x1+x2=7";
  return p;
}

SwitchedOCP build_ex3() {
  ScalarBilinearParams prm;
  prm.x0 = 1.0;
  prm.xf = 1.0;
  // Oriented so g(x0, t0) < 0: g = e*t - x.
  prm.interface = LinearInterfaceSpec{Vec::Constant(1, -1.0), std::exp(1.0), 0.0};
  SwitchedOCP p = make_scalar_bilinear(prm);
  p.name = "ex3-bilinear-tv";
  p.description = "scalar bilinear system, moving linear interface x=e*t";
  return p;
}

}  // namespace

const std::vector<RegistryEntry>& registry_list() {
  static const std::vector<RegistryEntry> entries = {
      {"circle-tiv", build_circle_tiv().description},
      {"linear-tv", build_linear_tv().description},
      {"ex1-scalar-tv", build_ex1().description},
      {"ex2-linear-terminal", build_ex2().description},
      {"ex3-bilinear-tv", build_ex3().description},
  };
  return entries;
}

SwitchedOCP registry_get(const std::string& name) {
  SwitchedOCP p;
  if (name == "circle-tiv") {
    p = build_circle_tiv();
  } else if (name == "linear-tv") {
    p = build_linear_tv();
  } else if (name == "ex1-scalar-tv") {
    p = build_ex1();
  } else if (name == "ex2-linear-terminal") {
    p = build_ex2();
  } else if (name == "ex3-bilinear-tv") {
    p = build_ex3();
  } else {
    std::string names;
    for (const auto& e : registry_list()) names += " " + e.name;
    throw NotFound("unknown problem '" + name + "'; available:" + names);
  }
  p.validate();
  return p;
}

}  // namespace swopt
