#include "swopt/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "swopt/finite_diff.hpp"
#include "swopt/newton.hpp"

namespace swopt {

namespace {

// ------------------------------------------------------------- bounding box

struct Box {
  Vec lo, hi;
  bool contains(const Vec& q, double tol) const {
    for (Eigen::Index i = 0; i < q.size(); ++i)
      if (q(i) < lo(i) - tol || q(i) > hi(i) + tol) return false;
    return true;
  }
  double diag() const { return (hi - lo).norm(); }
};

Box sweep_box(const SwitchedOCP& p) {
  const Vec xt = terminal_target(p);
  Box b;
  b.lo = p.x0.cwiseMin(xt).array() - 1.0;
  b.hi = p.x0.cwiseMax(xt).array() + 1.0;
  return b;
}

// --------------------------------------------------- interface curve tracing

struct TracedCurve {
  std::vector<Vec> points;
  std::vector<double> cumlen;
  bool closed = false;

  double length() const { return cumlen.empty() ? 0.0 : cumlen.back(); }

  Vec at_fraction(double f) const {
    const double s = std::clamp(f, 0.0, 1.0) * length();
    const auto it = std::upper_bound(cumlen.begin(), cumlen.end(), s);
    size_t i = std::min(points.size() - 1,
                        static_cast<size_t>(it - cumlen.begin()));
    if (i == 0) return points.front();
    const double s0 = cumlen[i - 1], s1 = cumlen[i];
    const double w = (s1 > s0) ? (s - s0) / (s1 - s0) : 0.0;
    return (1.0 - w) * points[i - 1] + w * points[i];
  }

  double nearest_fraction(const Vec& q) const {
    double best = std::numeric_limits<double>::max();
    size_t bi = 0;
    for (size_t i = 0; i < points.size(); ++i) {
      const double d = (points[i] - q).squaredNorm();
      if (d < best) {
        best = d;
        bi = i;
      }
    }
    if (length() <= 0) return 0.0;
    // Sub-segment projection onto the two adjacent polyline segments keeps
    // the parameterization continuous at refinement scales below the trace
    // spacing.
    double s = cumlen[bi];
    double bd = best;
    for (size_t i0 : {bi > 0 ? bi - 1 : bi, bi}) {
      if (i0 + 1 >= points.size()) continue;
      const Vec seg = points[i0 + 1] - points[i0];
      const double L2 = seg.squaredNorm();
      if (L2 <= 0) continue;
      const double w = std::clamp((q - points[i0]).dot(seg) / L2, 0.0, 1.0);
      const double d = (points[i0] + w * seg - q).squaredNorm();
      if (d < bd) {
        bd = d;
        s = cumlen[i0] + w * (cumlen[i0 + 1] - cumlen[i0]);
      }
    }
    return s / length();
  }
};

// Newton correction back onto {g = 0} along the gradient.
bool project_onto_curve(const SwitchedOCP& p, double t, Vec& q) {
  for (int it = 0; it < 12; ++it) {
    const double gv = p.interface.g(q, t);
    if (std::abs(gv) <= 1e-12) return true;
    const Vec gr = p.interface.grad_x(q, t);
    const double n2 = gr.squaredNorm();
    if (n2 < 1e-18) return false;
    q -= (gv / n2) * gr;
  }
  return std::abs(p.interface.g(q, t)) <= 1e-9;
}

std::vector<Vec> find_seeds(const SwitchedOCP& p, double t, const Box& box) {
  constexpr int kScan = 48;
  std::vector<Vec> seeds;
  Vec q(2);
  auto grid = [&](int i, int axis) {
    return box.lo(axis) + (box.hi(axis) - box.lo(axis)) * double(i) / (kScan - 1);
  };
  for (int i = 0; i < kScan; ++i) {
    double prev_g = 0.0;
    for (int j = 0; j < kScan; ++j) {
      q << grid(i, 0), grid(j, 1);
      const double gv = p.interface.g(q, t);
      if (j > 0 && prev_g * gv < 0.0) {
        // bisect along x2
        double a = grid(j - 1, 1), b = grid(j, 1);
        Vec qa(2);
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (a + b);
          qa << grid(i, 0), mid;
          const double gm = p.interface.g(qa, t);
          if (gm * prev_g <= 0.0)
            b = mid;
          else
            a = mid;
        }
        qa << grid(i, 0), 0.5 * (a + b);
        seeds.push_back(qa);
      }
      prev_g = gv;
    }
  }
  return seeds;
}

// March along the level curve from a seed with predictor-corrector steps.
std::vector<Vec> march(const SwitchedOCP& p, double t, const Box& box, Vec q0,
                       Vec dir, double h) {
  std::vector<Vec> pts;
  Vec q = q0;
  for (int step = 0; step < 5000; ++step) {
    Vec gr = p.interface.grad_x(q, t);
    Vec tan(2);
    tan << -gr(1), gr(0);
    const double tn = tan.norm();
    if (tn < 1e-14) break;
    tan /= tn;
    if (tan.dot(dir) < 0.0) tan = -tan;
    Vec qn = q + h * tan;
    if (!project_onto_curve(p, t, qn)) break;
    if (!box.contains(qn, 1e-9)) break;
    if (step > 5 && (qn - q0).norm() < 0.75 * h) {
      pts.push_back(qn);
      break;  // closed the loop
    }
    pts.push_back(qn);
    dir = tan;
    q = qn;
  }
  return pts;
}

TracedCurve trace_curve(const SwitchedOCP& p, double t, const Box& box) {
  TracedCurve out;
  const std::vector<Vec> seeds = find_seeds(p, t, box);
  if (seeds.empty()) return out;
  Vec seed = seeds.front();
  if (!project_onto_curve(p, t, seed)) return out;

  const double h = box.diag() / 600.0;
  const Vec gr = p.interface.grad_x(seed, t);
  Vec dir(2);
  dir << -gr(1), gr(0);
  if (dir.norm() < 1e-14) return out;
  dir.normalize();

  const std::vector<Vec> fwd = march(p, t, box, seed, dir, h);
  out.closed =
      !fwd.empty() && (fwd.back() - seed).norm() < 0.9 * h && fwd.size() > 5;

  std::vector<Vec> pts;
  if (!out.closed) {
    std::vector<Vec> bwd = march(p, t, box, seed, Vec(-dir), h);
    std::reverse(bwd.begin(), bwd.end());
    pts = std::move(bwd);
  }
  pts.push_back(seed);
  pts.insert(pts.end(), fwd.begin(), fwd.end());

  out.points = std::move(pts);
  out.cumlen.resize(out.points.size());
  out.cumlen[0] = 0.0;
  for (size_t i = 1; i < out.points.size(); ++i)
    out.cumlen[i] = out.cumlen[i - 1] + (out.points[i] - out.points[i - 1]).norm();
  return out;
}

// Roots of g(., t) on a widened scalar range.
std::vector<double> scalar_interface_roots(const SwitchedOCP& p, double t) {
  const Vec xt = terminal_target(p);
  const double mn = std::min(p.x0(0), xt(0)), mx = std::max(p.x0(0), xt(0));
  const double W = std::max(1.0, mx - mn);
  const double lo = mn - 1.0 - 2.0 * W, hi = mx + 1.0 + 2.0 * W;
  constexpr int kScan = 4096;
  std::vector<double> roots;
  Vec q(1);
  double prev = 0.0;
  for (int i = 0; i <= kScan; ++i) {
    const double x = lo + (hi - lo) * double(i) / kScan;
    q(0) = x;
    const double gv = p.interface.g(q, t);
    if (i > 0 && prev * gv <= 0.0 && (prev != 0.0 || gv != 0.0)) {
      double a = lo + (hi - lo) * double(i - 1) / kScan, b = x;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        q(0) = mid;
        if (p.interface.g(q, t) * prev <= 0.0)
          b = mid;
        else
          a = mid;
      }
      roots.push_back(0.5 * (a + b));
      if (roots.size() >= 8) break;
    }
    prev = gv;
  }
  return roots;
}

// ------------------------------------------------------ per-cell phase solver
//
// Fixed-endpoint single-phase TPBVP, multiple shooting over
// z = [lambda_a; interior nodes]. Propagation carries a running-cost
// component so the converged residual pass also yields the phase cost.
// Within a sweep row the Jacobian changes slowly, so cells retry a chord
// iteration with the cached factorization before a full Newton solve.

class PhaseCellSolver {
 public:
  PhaseCellSolver(const SwitchedOCP& p, Mode mode, double t_a, double t_b,
                  const TerminalCondition* terminal, const ShootingConfig& cfg)
      : p_(p), mode_(mode), t_a_(t_a), t_b_(t_b), terminal_(terminal),
        cfg_(cfg), n_(p.n), S_(std::max(2, cfg.segments_per_phase)) {
    rhs_ = make_augmented_rhs();
    x_a_.resize(n_);
    x_b_.resize(n_);
  }

  struct Result {
    double J = 0.0;
    Vec lambda_a, lambda_b, x_b;
    int iterations = 0;
  };

  // x_b is ignored when the phase ends in a terminal-cost condition.
  std::optional<Result> solve(const Vec& x_a, const Vec& x_b) {
    x_a_ = x_a;
    if (terminal_ == nullptr) x_b_ = x_b;

    auto fn = [this](const Vec& z, Vec& r) { residual(z, r); };

    if (have_lu_ && have_warm_) {
      try {
        Vec z = warm_z_, r(dim());
        if (chord_iterate(fn, lu_, z, r, cfg_.newton_tol, 4)) {
          warm_z_ = z;
          return extract(z, 0);
        }
      } catch (const SolverError&) {
      }
    }

    NewtonOptions opt;
    opt.tol = cfg_.newton_tol;
    opt.max_iters = cfg_.max_newton_iters;
    opt.fd_step = cfg_.fd_jacobian_step;
    opt.max_backtracks = cfg_.max_backtracks;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Vec z0 = (attempt == 0 && have_warm_) ? warm_z_ : cold_guess();
      try {
        NewtonOutcome res = damped_newton(fn, std::move(z0), opt);
        if (res.converged) {
          warm_z_ = res.z;
          have_warm_ = true;
          refresh_lu(fn, res.z);
          return extract(res.z, res.iterations);
        }
      } catch (const SolverError&) {
      }
      if (!have_warm_) break;
    }
    have_warm_ = false;
    have_lu_ = false;
    return std::nullopt;
  }

 private:
  int dim() const { return n_ + 2 * n_ * (S_ - 1); }

  double node_time(int s) const {
    return t_a_ + (t_b_ - t_a_) * double(s) / double(S_);
  }

  OdeRhs make_augmented_rhs() {
    const int n = n_;
    const SwitchedOCP& p = p_;
    const Mode mode = mode_;
    return [&p, mode, n, x = Vec(n), lam = Vec(n)](const Vec& y, double t,
                                                   Vec& dy) mutable {
      x = y.head(n);
      lam = y.segment(n, n);
      const Vec u = optimal_control(p, mode, x, lam, t);
      const auto& dyn = p.dynamics(mode);
      const auto& cost = p.cost(mode);
      dy.head(n) = dyn.rhs(x, u, t);
      const Vec gLx = cost.grad_x ? cost.grad_x(x, u, t)
                                  : fd::gradient(
                                        [&](const Vec& xx) {
                                          return cost.value(xx, u, t);
                                        },
                                        x);
      const Mat fx = dyn.jac_x ? dyn.jac_x(x, u, t)
                               : fd::jacobian(
                                     [&](const Vec& xx) {
                                       return dyn.rhs(xx, u, t);
                                     },
                                     x);
      dy.segment(n, n) = -gLx - fx.transpose() * lam;
      dy(2 * n) = cost.value(x, u, t);
    };
  }

  // Residual layout: matching (S-1)*2n rows, endpoint n rows. Also records
  // the accumulated cost and the endpoint state/co-state of this evaluation.
  void residual(const Vec& z, Vec& r) {
    const int n = n_;
    r.resize(dim());
    Vec y(2 * n + 1);
    double Jacc = 0.0;
    int row = 0;
    y.head(n) = x_a_;
    y.segment(n, n) = z.head(n);
    y(2 * n) = 0.0;
    for (int s = 0; s < S_; ++s) {
      const Vec y_end = integrate_endpoint(rhs_, y, node_time(s), node_time(s + 1),
                                           cfg_.integrator);
      Jacc += y_end(2 * n);
      if (s + 1 < S_) {
        const auto node = z.segment(n + 2 * n * s, 2 * n);
        r.segment(row, 2 * n) = y_end.head(2 * n) - node;
        row += 2 * n;
        y.head(2 * n) = node;
        y(2 * n) = 0.0;
      } else {
        last_x_end_ = y_end.head(n);
        last_lam_end_ = y_end.segment(n, n);
      }
    }
    if (terminal_ == nullptr) {
      r.segment(row, n) = last_x_end_ - x_b_;
    } else if (const auto* fs = std::get_if<FixedState>(terminal_)) {
      r.segment(row, n) = last_x_end_ - fs->xf;
    } else {
      const auto& tc = std::get<TerminalCost>(*terminal_);
      const Vec grad =
          tc.grad ? tc.grad(last_x_end_) : fd::gradient(tc.phi, last_x_end_);
      r.segment(row, n) = last_lam_end_ - grad;
    }
    last_J_ = Jacc;
  }

  Vec cold_guess() const {
    Vec z = Vec::Zero(dim());
    Vec target = x_b_;
    if (terminal_ != nullptr) {
      if (const auto* fs = std::get_if<FixedState>(terminal_))
        target = fs->xf;
      else
        target = terminal_target(p_);
    }
    for (int s = 1; s < S_; ++s) {
      const double w = double(s) / double(S_);
      z.segment(n_ + 2 * n_ * (s - 1), n_) = (1.0 - w) * x_a_ + w * target;
    }
    return z;
  }

  void refresh_lu(const ResidualFn& fn, const Vec& z) {
    Vec r0(dim());
    fn(z, r0);
    Mat J;
    fd_jacobian(fn, z, r0, cfg_.fd_jacobian_step, J);
    lu_.compute(J);
    have_lu_ = lu_.rcond() > 1e-14;
  }

  std::optional<Result> extract(const Vec& z, int iters) {
    // One clean pass at the converged unknowns for cost and endpoints.
    Vec r(dim());
    residual(z, r);
    Result out;
    out.J = last_J_;
    out.lambda_a = z.head(n_);
    out.lambda_b = last_lam_end_;
    out.x_b = last_x_end_;
    out.iterations = iters;
    return out;
  }

  const SwitchedOCP& p_;
  Mode mode_;
  double t_a_, t_b_;
  const TerminalCondition* terminal_;  // null: fixed endpoint from solve()
  ShootingConfig cfg_;
  int n_, S_;
  OdeRhs rhs_;
  Vec x_a_, x_b_;
  Vec last_x_end_, last_lam_end_;
  double last_J_ = 0.0;
  Eigen::PartialPivLU<Mat> lu_;
  bool have_lu_ = false, have_warm_ = false;
  Vec warm_z_;
};

double terminal_cost_value(const SwitchedOCP& p, const Vec& xf) {
  if (const auto* tc = std::get_if<TerminalCost>(&p.terminal)) return tc->phi(xf);
  return 0.0;
}

// ------------------------------------------------------------ sweep plumbing

struct RowSpec {
  double tau;
  double frac_lo = 0.0, frac_hi = 1.0;  // n = 2: arc-length window
  int count = 0;
};

std::vector<SweepCell> run_row(const SwitchedOCP& p, const RowSpec& row,
                               const Box& box, const ShootingConfig& cfg) {
  std::vector<SweepCell> cells;
  std::vector<Vec> points;
  std::vector<double> fracs;

  if (p.n == 1) {
    for (double rt : scalar_interface_roots(p, row.tau)) {
      points.push_back(Vec::Constant(1, rt));
      fracs.push_back(rt);
    }
  } else {
    const TracedCurve curve = trace_curve(p, row.tau, box);
    if (curve.points.size() < 2) return cells;
    const int count = row.count;
    for (int i = 0; i < count; ++i) {
      const double f =
          curve.closed && row.frac_lo == 0.0 && row.frac_hi == 1.0
              ? double(i) / double(count)
              : row.frac_lo +
                    (row.frac_hi - row.frac_lo) * double(i) / double(count - 1);
      Vec q = curve.at_fraction(f);
      if (!project_onto_curve(p, row.tau, q)) continue;
      points.push_back(std::move(q));
      fracs.push_back(f);
    }
  }
  if (points.empty()) return cells;

  PhaseCellSolver s1(p, Mode::one, p.t0, row.tau, nullptr, cfg);
  PhaseCellSolver s2(p, Mode::two, row.tau, p.tf, &p.terminal, cfg);

  cells.reserve(points.size());
  const Vec none;
  for (size_t j = 0; j < points.size(); ++j) {
    SweepCell cell;
    cell.tau = row.tau;
    cell.param = fracs[j];
    cell.x_s = points[j];
    try {
      const auto r1 = s1.solve(p.x0, points[j]);
      if (r1) {
        const auto r2 = s2.solve(points[j], none);
        if (r2) {
          cell.J = r1->J + r2->J + terminal_cost_value(p, r2->x_b);
          cell.ok = std::isfinite(cell.J);
        }
      }
    } catch (const SolverError&) {
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

// Deterministic argmin: smaller J, ties to smaller tau, then smaller x_s.
bool better(const SweepCell& a, const SweepCell& b) {
  if (!a.ok) return false;
  if (!b.ok) return true;
  if (a.J != b.J) return a.J < b.J;
  if (a.tau != b.tau) return a.tau < b.tau;
  for (Eigen::Index i = 0; i < a.x_s.size(); ++i)
    if (a.x_s(i) != b.x_s(i)) return a.x_s(i) < b.x_s(i);
  return false;
}

std::vector<std::vector<SweepCell>> run_pass(const SwitchedOCP& p,
                                             const std::vector<RowSpec>& rows,
                                             const Box& box,
                                             const ShootingConfig& cfg,
                                             int workers) {
  std::vector<std::vector<SweepCell>> results(rows.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= rows.size()) return;
      results[i] = run_row(p, rows[i], box, cfg);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace

ShootingConfig sweep_shooting_defaults() {
  ShootingConfig cfg;
  cfg.segments_per_phase = 2;
  cfg.newton_tol = 1e-9;
  cfg.max_newton_iters = 25;
  cfg.max_backtracks = 8;
  cfg.integrator.method = IntegrationMethod::rk4_fixed;
  cfg.integrator.fixed_steps_per_unit_time = 60;
  return cfg;
}

PhaseSolution solve_phase_fixed_endpoints(const SwitchedOCP& p, Mode mode,
                                          const Vec& x_a, double t_a,
                                          const TerminalCondition& end,
                                          double t_b,
                                          const ShootingConfig& cfg) {
  if (!(t_a < t_b))
    throw ContractViolation("solve_phase_fixed_endpoints: requires t_a < t_b");
  PhaseCellSolver solver(p, mode, t_a, t_b, &end, cfg);
  Vec dummy;
  const auto res = solver.solve(x_a, dummy);
  if (!res)
    throw BvpDiverged("phase BVP did not converge", cfg.max_newton_iters, 0.0);

  // Dense pass for the trajectories; cost by Simpson on the dense grid would
  // duplicate the integrated running cost, so the cell's value is kept.
  PhaseSolution out;
  out.J = res->J;
  out.lambda_a = res->lambda_a;
  out.lambda_b = res->lambda_b;
  out.newton_iters = res->iterations;

  // Re-propagate on a uniform grid for reporting.
  const int pts = std::max(5, cfg.dense_points_per_phase) | 1;
  const std::vector<double> grid = uniform_grid(t_a, t_b, pts);
  const int n = p.n;
  OdeRhs rhs = [&p, mode, n, x = Vec(n), lam = Vec(n)](const Vec& y, double t,
                                                       Vec& dy) mutable {
    x = y.head(n);
    lam = y.tail(n);
    const Vec u = optimal_control(p, mode, x, lam, t);
    const auto& dyn = p.dynamics(mode);
    const auto& cost = p.cost(mode);
    dy.head(n) = dyn.rhs(x, u, t);
    const Vec gLx =
        cost.grad_x
            ? cost.grad_x(x, u, t)
            : fd::gradient([&](const Vec& xx) { return cost.value(xx, u, t); }, x);
    const Mat fx =
        dyn.jac_x
            ? dyn.jac_x(x, u, t)
            : fd::jacobian([&](const Vec& xx) { return dyn.rhs(xx, u, t); }, x);
    dy.tail(n) = -gLx - fx.transpose() * lam;
  };
  Vec y0(2 * n);
  y0.head(n) = x_a;
  y0.tail(n) = res->lambda_a;
  const OdeTrajectory traj = integrate(rhs, y0, t_a, t_b, cfg.integrator, grid);
  out.x.times = traj.times;
  out.lam.times = traj.times;
  out.x.values.reserve(traj.values.size());
  out.lam.values.reserve(traj.values.size());
  out.u.reserve(traj.values.size());
  for (size_t i = 0; i < traj.values.size(); ++i) {
    out.x.values.push_back(traj.values[i].head(n));
    out.lam.values.push_back(traj.values[i].tail(n));
    out.u.push_back(
        optimal_control(p, mode, out.x.values[i], out.lam.values[i], traj.times[i]));
  }
  return out;
}

std::vector<Vec> sample_interface(const SwitchedOCP& p, double t, int count) {
  if (p.n == 1) {
    std::vector<Vec> pts;
    for (double r : scalar_interface_roots(p, t)) pts.push_back(Vec::Constant(1, r));
    return pts;
  }
  if (p.n != 2)
    throw ContractViolation("interface sampling is implemented for n <= 2");
  const Box box = sweep_box(p);
  const TracedCurve curve = trace_curve(p, t, box);
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i) {
    const double f = curve.closed ? double(i) / double(count)
                                  : double(i) / double(count - 1);
    Vec q = curve.at_fraction(f);
    if (project_onto_curve(p, t, q)) pts.push_back(std::move(q));
  }
  return pts;
}

OracleResult sweep(const SwitchedOCP& p, const SweepConfig& cfg,
                   const ShootingConfig& shooting) {
  if (cfg.tau_count < 10 || (p.n >= 2 && cfg.interface_param_count < 10))
    throw ContractViolation("sweep: grid counts must be >= 10");
  if (p.n > 2)
    throw ContractViolation("sweep: implemented for n <= 2");

  const Box box = sweep_box(p);
  const double eps = 1e-3 * (p.tf - p.t0);
  const double lo = p.t0 + eps, hi = p.tf - eps;
  const int workers = cfg.parallel_workers > 0
                          ? cfg.parallel_workers
                          : std::max(1u, std::thread::hardware_concurrency());

  OracleResult out;
  double tau_step = (hi - lo) / double(cfg.tau_count - 1);

  // Coarse pass over the full grid.
  std::vector<RowSpec> rows;
  rows.reserve(static_cast<size_t>(cfg.tau_count));
  for (int i = 0; i < cfg.tau_count; ++i)
    rows.push_back({lo + tau_step * i, 0.0, 1.0, cfg.interface_param_count});

  auto coarse = run_pass(p, rows, box, shooting, workers);

  SweepCell best;
  size_t best_row = 0;
  auto fold = [&](const std::vector<std::vector<SweepCell>>& passes,
                  bool record) {
    for (size_t i = 0; i < passes.size(); ++i)
      for (const auto& c : passes[i]) {
        if (better(c, best)) {
          best = c;
          if (record) best_row = i;
        }
        if (c.ok) {
          out.J_surface.push_back(c);
        } else if (out.failures.size() < 20000) {
          out.failures.push_back(c);
        }
      }
  };
  fold(coarse, true);
  if (!best.ok) throw OracleExhausted("no sweep cell produced a solution");

  // Interior-minimum check on the coarse tau grid.
  auto row_min = [&](size_t i) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : coarse[i])
      if (c.ok) m = std::min(m, c.J);
    return m;
  };
  out.interior_minimum = best_row > 0 && best_row + 1 < coarse.size() &&
                         row_min(best_row - 1) >= best.J &&
                         row_min(best_row + 1) >= best.J;

  // Local refinement: +-2 cells around the incumbent at 10x resolution.
  double frac_step = p.n >= 2 ? 1.0 / double(cfg.interface_param_count) : 0.0;
  std::vector<std::vector<SweepCell>> last_round;
  for (int round = 0; round < cfg.refinement_rounds; ++round) {
    ShootingConfig fine = shooting;
    fine.integrator.method = IntegrationMethod::rkf45_adaptive;
    fine.integrator.rel_tol = (round == 0) ? 1e-9 : 1e-11;
    fine.integrator.abs_tol = (round == 0) ? 1e-11 : 1e-13;
    fine.newton_tol = 1e-10;

    const double t_lo = std::max(lo, best.tau - 2.0 * tau_step);
    const double t_hi = std::min(hi, best.tau + 2.0 * tau_step);
    const int kPts = 41;
    std::vector<RowSpec> rr;
    rr.reserve(kPts);
    for (int i = 0; i < kPts; ++i) {
      RowSpec r;
      r.tau = t_lo + (t_hi - t_lo) * double(i) / double(kPts - 1);
      r.count = kPts;
      if (p.n >= 2) {
        // Anchor the arc-length window on the incumbent's position so the
        // parameterization stays stable while the curve moves with tau.
        const TracedCurve curve = trace_curve(p, r.tau, box);
        const double f0 =
            curve.points.size() >= 2 ? curve.nearest_fraction(best.x_s) : 0.5;
        r.frac_lo = std::clamp(f0 - 2.0 * frac_step, 0.0, 1.0);
        r.frac_hi = std::clamp(f0 + 2.0 * frac_step, 0.0, 1.0);
      }
      rr.push_back(r);
    }
    auto refined = run_pass(p, rr, box, fine, workers);
    fold(refined, false);
    if (round + 1 == cfg.refinement_rounds) last_round = refined;
    tau_step = (t_hi - t_lo) / double(kPts - 1);
    frac_step = frac_step * 4.0 / double(kPts - 1);
  }
  out.final_tau_step = tau_step;

  // Quadratic-fit polish of the incumbent: one parabolic vertex per grid
  // dimension on the final lattice removes the residual grid quantization
  // (the co-states inherit it otherwise).
  double tau_star = best.tau;
  Vec x_s_star = best.x_s;
  if (!last_round.empty()) {
    // Argmin within the final lattice (within half a cell of the global
    // incumbent) gives the stencil for the parabolic vertices.
    size_t ri = 0, rj = 0;
    const SweepCell* local = nullptr;
    for (size_t i = 0; i < last_round.size(); ++i)
      for (size_t j = 0; j < last_round[i].size(); ++j) {
        const auto& c = last_round[i][j];
        if (c.ok && (local == nullptr || better(c, *local))) {
          local = &c;
          ri = i;
          rj = j;
        }
      }
    auto vertex = [](double Jm, double J0, double Jp) {
      const double denom = Jm - 2.0 * J0 + Jp;
      if (!(denom > 0.0)) return 0.0;
      return std::clamp(0.5 * (Jm - Jp) / denom, -1.0, 1.0);
    };
    if (local != nullptr) {
      tau_star = local->tau;
      x_s_star = local->x_s;
      // tau direction: same column in the neighbor rows.
      if (ri > 0 && ri + 1 < last_round.size() &&
          rj < last_round[ri - 1].size() && rj < last_round[ri + 1].size() &&
          last_round[ri - 1][rj].ok && last_round[ri + 1][rj].ok) {
        const double c = vertex(last_round[ri - 1][rj].J, local->J,
                                last_round[ri + 1][rj].J);
        tau_star = local->tau + c * (last_round[ri + 1][rj].tau - local->tau);
      }
      // interface direction: neighbor columns of the incumbent's row.
      if (p.n >= 2 && rj > 0 && rj + 1 < last_round[ri].size() &&
          last_round[ri][rj - 1].ok && last_round[ri][rj + 1].ok) {
        const double c = vertex(last_round[ri][rj - 1].J, local->J,
                                last_round[ri][rj + 1].J);
        const Vec& qm = last_round[ri][rj - 1].x_s;
        const Vec& qp = last_round[ri][rj + 1].x_s;
        x_s_star = local->x_s + c * 0.5 * (qp - qm);
      }
    }
  }
  auto root_near = [&p](double t, double x_near) {
    double nearest = x_near;
    double dist = std::numeric_limits<double>::max();
    for (double rt : scalar_interface_roots(p, t)) {
      if (std::abs(rt - x_near) < dist) {
        dist = std::abs(rt - x_near);
        nearest = rt;
      }
    }
    return nearest;
  };
  if (p.n == 1)
    x_s_star = Vec::Constant(1, root_near(tau_star, best.x_s(0)));
  else
    project_onto_curve(p, tau_star, x_s_star);

  // Two coordinate vertex iterations with fresh evaluations localize the
  // minimizer well below the final grid step (the co-states at the switch
  // are the sensitive output).
  {
    ShootingConfig fine = shooting;
    fine.integrator.method = IntegrationMethod::rkf45_adaptive;
    fine.integrator.rel_tol = 1e-11;
    fine.integrator.abs_tol = 1e-13;
    fine.newton_tol = 1e-10;
    auto eval_cell = [&](double t, const Vec& q) -> double {
      PhaseCellSolver s1(p, Mode::one, p.t0, t, nullptr, fine);
      PhaseCellSolver s2(p, Mode::two, t, p.tf, &p.terminal, fine);
      const auto r1 = s1.solve(p.x0, q);
      if (!r1) return std::numeric_limits<double>::quiet_NaN();
      const auto r2 = s2.solve(q, Vec());
      if (!r2) return std::numeric_limits<double>::quiet_NaN();
      return r1->J + r2->J + terminal_cost_value(p, r2->x_b);
    };
    auto vertex = [](double Jm, double J0, double Jp) {
      const double denom = Jm - 2.0 * J0 + Jp;
      if (!std::isfinite(denom) || !(denom > 0.0)) return 0.0;
      return std::clamp(0.5 * (Jm - Jp) / denom, -1.0, 1.0);
    };
    double dtau = std::max(out.final_tau_step, 1e-7);
    double ds = p.n >= 2 ? 0.5 * box.diag() / double(cfg.interface_param_count) / 100.0
                         : 0.0;
    for (int it = 0; it < 2; ++it) {
      // tau sweep (x_s follows the interface for n = 1).
      auto q_at = [&](double t) {
        if (p.n == 1) return Vec(Vec::Constant(1, root_near(t, x_s_star(0))));
        Vec q = x_s_star;
        project_onto_curve(p, t, q);
        return q;
      };
      const double t_lo2 = std::max(lo, tau_star - dtau);
      const double t_hi2 = std::min(hi, tau_star + dtau);
      const double Jm = eval_cell(t_lo2, q_at(t_lo2));
      const double J0 = eval_cell(tau_star, x_s_star);
      const double Jp = eval_cell(t_hi2, q_at(t_hi2));
      if (std::isfinite(Jm) && std::isfinite(J0) && std::isfinite(Jp)) {
        tau_star += vertex(Jm, J0, Jp) * dtau;
        x_s_star = q_at(tau_star);
      }
      if (p.n >= 2) {
        Vec gr = p.interface.grad_x(x_s_star, tau_star);
        Vec tangent(2);
        tangent << -gr(1), gr(0);
        if (tangent.norm() > 1e-14) {
          tangent.normalize();
          Vec qm = x_s_star - ds * tangent, qp = x_s_star + ds * tangent;
          if (project_onto_curve(p, tau_star, qm) &&
              project_onto_curve(p, tau_star, qp)) {
            const double Jsm = eval_cell(tau_star, qm);
            const double Js0 = eval_cell(tau_star, x_s_star);
            const double Jsp = eval_cell(tau_star, qp);
            if (std::isfinite(Jsm) && std::isfinite(Js0) && std::isfinite(Jsp)) {
              x_s_star += vertex(Jsm, Js0, Jsp) * ds * tangent;
              project_onto_curve(p, tau_star, x_s_star);
            }
          }
        }
      }
      dtau /= 5.0;
      ds /= 5.0;
    }
  }

  // Tight re-solve at the polished minimizer for the reported values.
  ShootingConfig polish = shooting;
  polish.segments_per_phase = std::max(4, shooting.segments_per_phase);
  polish.integrator.method = IntegrationMethod::rkf45_adaptive;
  polish.integrator.rel_tol = 1e-11;
  polish.integrator.abs_tol = 1e-13;
  polish.newton_tol = 1e-11;
  polish.dense_points_per_phase = 401;

  const PhaseSolution ph1 = solve_phase_fixed_endpoints(
      p, Mode::one, p.x0, p.t0, TerminalCondition{FixedState{x_s_star}}, tau_star,
      polish);
  const PhaseSolution ph2 = solve_phase_fixed_endpoints(
      p, Mode::two, x_s_star, tau_star, p.terminal, p.tf, polish);

  out.tau_star = tau_star;
  out.x_s_star = x_s_star;
  out.J_star = ph1.J + ph2.J + terminal_cost_value(p, ph2.x.values.back());
  out.lambda_minus = ph1.lambda_b;
  out.lambda_plus = ph2.lambda_a;
  out.delta_lambda_empirical = ph2.lambda_a - ph1.lambda_b;
  out.switch_data = make_switch_point_data(p, x_s_star, tau_star, ph1.lambda_b,
                                           ph2.lambda_a);
  return out;
}

}  // namespace swopt
