#include "swopt/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace swopt {

namespace {

struct Node {
  double t;
  Vec y;
  Vec f;  // rhs at (t, y)
};

// Cubic Hermite on [n0.t, n1.t].
Vec hermite(const Node& n0, const Node& n1, double t) {
  const double h = n1.t - n0.t;
  const double th = (t - n0.t) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1;
  const double h10 = th3 - 2 * th2 + th;
  const double h01 = -2 * th3 + 3 * th2;
  const double h11 = th3 - th2;
  return h00 * n0.y + (h10 * h) * n0.f + h01 * n1.y + (h11 * h) * n1.f;
}

constexpr double kSameTimeTol = 1e-13;

bool same_time(double a, double b, double span) {
  return std::abs(a - b) <= kSameTimeTol * std::max(1.0, std::abs(span));
}

class GridFiller {
 public:
  GridFiller(std::span<const double> grid, double span)
      : grid_(grid), span_(span) {
    out_.times.reserve(grid.size());
    out_.values.reserve(grid.size());
  }

  // Consume grid points in (prev.t, cur.t]; exact copies at node times.
  void advance(const Node& prev, const Node& cur) {
    while (next_ < grid_.size()) {
      const double tg = grid_[next_];
      if (tg > cur.t && !same_time(tg, cur.t, span_)) break;
      Vec v;
      if (same_time(tg, cur.t, span_)) {
        v = cur.y;
      } else if (same_time(tg, prev.t, span_)) {
        v = prev.y;
      } else {
        v = hermite(prev, cur, tg);
      }
      out_.times.push_back(tg);
      out_.values.push_back(std::move(v));
      ++next_;
    }
  }

  void start(const Node& first) {
    while (next_ < grid_.size() &&
           (grid_[next_] < first.t || same_time(grid_[next_], first.t, span_))) {
      out_.times.push_back(grid_[next_]);
      out_.values.push_back(first.y);
      ++next_;
    }
  }

  bool done() const { return next_ == grid_.size(); }
  OdeTrajectory take() { return std::move(out_); }

 private:
  std::span<const double> grid_;
  double span_;
  size_t next_ = 0;
  OdeTrajectory out_;
};

// Classical RK4 step into y_out; stages are caller-provided scratch.
struct Rk4Scratch {
  Vec k1, k2, k3, k4, tmp;
  explicit Rk4Scratch(Eigen::Index n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}
};

void rk4_step(const OdeRhs& rhs, const Vec& y, double t, double h, Vec& y_out,
              Rk4Scratch& s) {
  rhs(y, t, s.k1);
  s.tmp = y + (0.5 * h) * s.k1;
  rhs(s.tmp, t + 0.5 * h, s.k2);
  s.tmp = y + (0.5 * h) * s.k2;
  rhs(s.tmp, t + 0.5 * h, s.k3);
  s.tmp = y + h * s.k3;
  rhs(s.tmp, t + h, s.k4);
  y_out = y + (h / 6.0) * (s.k1 + 2.0 * s.k2 + 2.0 * s.k3 + s.k4);
}

// Fehlberg 4(5) pair; advances with the 5th-order value.
struct Rkf45Scratch {
  Vec k1, k2, k3, k4, k5, k6, tmp, y5, y4;
  explicit Rkf45Scratch(Eigen::Index n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n), y5(n), y4(n) {}
};

// Returns the scaled error estimate (<= 1 means accept).
double rkf45_step(const OdeRhs& rhs, const Vec& y, double t, double h,
                  const IntegratorConfig& cfg, Rkf45Scratch& s) {
  rhs(y, t, s.k1);
  s.tmp = y + h * (0.25 * s.k1);
  rhs(s.tmp, t + 0.25 * h, s.k2);
  s.tmp = y + h * ((3.0 / 32) * s.k1 + (9.0 / 32) * s.k2);
  rhs(s.tmp, t + (3.0 / 8) * h, s.k3);
  s.tmp = y + h * ((1932.0 / 2197) * s.k1 - (7200.0 / 2197) * s.k2 +
                   (7296.0 / 2197) * s.k3);
  rhs(s.tmp, t + (12.0 / 13) * h, s.k4);
  s.tmp = y + h * ((439.0 / 216) * s.k1 - 8.0 * s.k2 + (3680.0 / 513) * s.k3 -
                   (845.0 / 4104) * s.k4);
  rhs(s.tmp, t + h, s.k5);
  s.tmp = y + h * (-(8.0 / 27) * s.k1 + 2.0 * s.k2 - (3544.0 / 2565) * s.k3 +
                   (1859.0 / 4104) * s.k4 - (11.0 / 40) * s.k5);
  rhs(s.tmp, t + 0.5 * h, s.k6);

  s.y5 = y + h * ((16.0 / 135) * s.k1 + (6656.0 / 12825) * s.k3 +
                  (28561.0 / 56430) * s.k4 - (9.0 / 50) * s.k5 +
                  (2.0 / 55) * s.k6);
  s.y4 = y + h * ((25.0 / 216) * s.k1 + (1408.0 / 2565) * s.k3 +
                  (2197.0 / 4104) * s.k4 - (1.0 / 5) * s.k5);

  double err = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double scale =
        cfg.abs_tol +
        cfg.rel_tol * std::max(std::abs(y(i)), std::abs(s.y5(i)));
    err = std::max(err, std::abs(s.y5(i) - s.y4(i)) / scale);
  }
  return err;
}

template <typename OnStep>
void run_rk4(const OdeRhs& rhs, const Vec& y_a, double t_a, double t_b,
             const IntegratorConfig& cfg, OnStep&& on_step) {
  const double span = t_b - t_a;
  const long steps = std::max<long>(
      1, static_cast<long>(std::ceil(cfg.fixed_steps_per_unit_time * span)));
  if (steps > cfg.max_steps)
    throw StepBudgetExceeded("rk4 step budget exceeded", steps);
  const double h = span / static_cast<double>(steps);
  Rk4Scratch s(y_a.size());
  Vec y = y_a, y_next(y_a.size());
  double t = t_a;
  for (long i = 0; i < steps; ++i) {
    const double t_next = (i + 1 == steps) ? t_b : t_a + h * double(i + 1);
    rk4_step(rhs, y, t, t_next - t, y_next, s);
    if (!y_next.allFinite())
      throw NumericalBlowup("non-finite state during rk4 integration", t_next);
    on_step(t, y, s.k1, t_next, y_next);
    y.swap(y_next);
    t = t_next;
  }
}

template <typename OnStep>
void run_rkf45(const OdeRhs& rhs, const Vec& y_a, double t_a, double t_b,
               const IntegratorConfig& cfg, OnStep&& on_step) {
  const double span = t_b - t_a;
  Rkf45Scratch s(y_a.size());
  Vec y = y_a;
  double t = t_a;
  double h = span / 100.0;
  long attempts = 0;
  int consecutive_rejects = 0;
  bool done = false;
  while (!done) {
    bool last = false;
    double h_try = h;
    if (t + h_try >= t_b) {
      h_try = t_b - t;
      last = true;
    }
    if (h_try < 1e-14 * std::max(1.0, std::abs(t)))
      throw NumericalBlowup("rkf45 step size underflow", t);
    if (++attempts > cfg.max_steps)
      throw StepBudgetExceeded("rkf45 step budget exceeded", attempts);
    const double err = rkf45_step(rhs, y, t, h_try, cfg, s);
    if (std::isnan(err) || !s.y5.allFinite()) {
      if (++consecutive_rejects > 60)
        throw NumericalBlowup("non-finite rhs value during rkf45 integration", t);
      h = 0.5 * h_try;
      continue;
    }
    if (err <= 1.0) {
      consecutive_rejects = 0;
      const double t_next = last ? t_b : t + h_try;
      on_step(t, y, s.k1, t_next, s.y5);
      y = s.y5;
      t = t_next;
      done = last;
      h = h_try * std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    } else {
      ++consecutive_rejects;
      h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
  }
}

template <typename OnStep>
void run(const OdeRhs& rhs, const Vec& y_a, double t_a, double t_b,
         const IntegratorConfig& cfg, OnStep&& on_step) {
  if (!(t_a < t_b)) throw ContractViolation("integrate: requires t_a < t_b");
  if (!y_a.allFinite()) throw ContractViolation("integrate: non-finite initial state");
  if (cfg.method == IntegrationMethod::rk4_fixed)
    run_rk4(rhs, y_a, t_a, t_b, cfg, on_step);
  else
    run_rkf45(rhs, y_a, t_a, t_b, cfg, on_step);
}

}  // namespace

OdeTrajectory integrate(const OdeRhs& rhs, const Vec& y_a, double t_a,
                        double t_b, const IntegratorConfig& cfg,
                        std::span<const double> output_grid) {
  if (output_grid.empty()) {
    OdeTrajectory out;
    out.times.push_back(t_a);
    out.values.push_back(y_a);
    run(rhs, y_a, t_a, t_b, cfg,
        [&](double, const Vec&, const Vec&, double t1, const Vec& y1) {
          out.times.push_back(t1);
          out.values.push_back(y1);
        });
    return out;
  }

  GridFiller filler(output_grid, t_b - t_a);
  Vec f0(y_a.size());
  rhs(y_a, t_a, f0);
  Node first{t_a, y_a, f0};
  filler.start(first);
  Node prev = first;
  run(rhs, y_a, t_a, t_b, cfg,
      [&](double t0, const Vec& y0, const Vec& k1, double t1, const Vec& y1) {
        prev = Node{t0, y0, k1};
        // derivative at the step end: evaluate only if grid points remain
        if (!filler.done()) {
          Vec f1(y1.size());
          rhs(y1, t1, f1);
          Node cur{t1, y1, f1};
          filler.advance(prev, cur);
        }
      });
  return filler.take();
}

Vec integrate_endpoint(const OdeRhs& rhs, const Vec& y_a, double t_a,
                       double t_b, const IntegratorConfig& cfg) {
  Vec y_end = y_a;
  run(rhs, y_a, t_a, t_b, cfg,
      [&](double, const Vec&, const Vec&, double, const Vec& y1) { y_end = y1; });
  return y_end;
}

std::vector<double> uniform_grid(double a, double b, int count) {
  std::vector<double> g(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    g[static_cast<size_t>(i)] = a + (b - a) * double(i) / double(count - 1);
  g.back() = b;
  return g;
}

Vec OdeTrajectory::interpolate(double t) const {
  if (values.empty()) throw ContractViolation("interpolate: empty trajectory");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const size_t i = static_cast<size_t>(it - times.begin());
  const double t0 = times[i - 1], t1 = times[i];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * values[i - 1] + w * values[i];
}

}  // namespace swopt
