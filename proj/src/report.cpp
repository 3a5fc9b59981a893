#include "swopt/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "swopt/version.hpp"

namespace swopt {

namespace {

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SolverError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string params_hash(const Json& resolved_params) {
  // FNV-1a over the canonical dump.
  const std::string s = resolved_params.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

RunReport report_from_gel(const SwitchedOCP& p, const GelResult& r,
                          const std::string& hash, double wall_seconds) {
  Json j;
  j["schema"] = kReportSchema;
  j["tool_version"] = kToolVersion;
  j["problem"] = p.name;
  j["params_hash"] = hash;
  j["solver"] = "gel";
  j["converged"] = r.converged;
  j["stop_reason"] = to_string(r.trace.stop_reason);
  j["iterations"] = r.trace.iterations;
  j["tau_star"] = r.tau_star;
  j["J_star"] = r.J_star;
  j["x_s"] = vec_json(r.solution.x_switch);
  j["delta_lambda_empirical"] = vec_json(r.delta_lambda_empirical);
  j["delta_lambda_law"] = vec_json(r.delta_lambda_law);
  j["hamiltonian_gap"] = r.solution.hamiltonian_gap;
  j["held_out_residual"] = r.solution.held_out_residual;
  const double dlam_norm = r.delta_lambda_empirical.size()
                               ? r.delta_lambda_empirical.cwiseAbs().maxCoeff()
                               : 0.0;
  const double lam_scale = r.solution.lambda_minus.size()
                               ? r.solution.lambda_minus.cwiseAbs().maxCoeff()
                               : 0.0;
  j["fictitious_switch"] = dlam_norm <= 1e-3 * (1.0 + lam_scale);
  Json trace = Json::array();
  for (const auto& it : r.trace.records) {
    Json t;
    t["k"] = it.k;
    t["tau"] = it.tau;
    t["F"] = it.F;
    t["Fprime"] = it.Fprime;
    t["step"] = it.step;
    t["inner_newton_iters"] = it.inner_newton_iters;
    t["inner_residual"] = it.inner_residual;
    t["halvings"] = it.halvings;
    trace.push_back(std::move(t));
  }
  j["trace"] = std::move(trace);
  j["wall_seconds"] = wall_seconds;
  return RunReport{std::move(j)};
}

RunReport report_from_oracle(const SwitchedOCP& p, const OracleResult& r,
                             const std::string& hash, double wall_seconds) {
  Json j;
  j["schema"] = kReportSchema;
  j["tool_version"] = kToolVersion;
  j["problem"] = p.name;
  j["params_hash"] = hash;
  j["solver"] = "oracle";
  j["converged"] = true;
  j["tau_star"] = r.tau_star;
  j["J_star"] = r.J_star;
  j["x_s"] = vec_json(r.x_s_star);
  j["delta_lambda_empirical"] = vec_json(r.delta_lambda_empirical);
  j["lambda_minus"] = vec_json(r.lambda_minus);
  j["lambda_plus"] = vec_json(r.lambda_plus);
  j["interior_minimum"] = r.interior_minimum;
  j["final_tau_step"] = r.final_tau_step;
  j["cells"] = r.J_surface.size();
  j["failed_cells"] = r.failures.size();
  const double dlam_norm = r.delta_lambda_empirical.size()
                               ? r.delta_lambda_empirical.cwiseAbs().maxCoeff()
                               : 0.0;
  const double lam_scale = r.lambda_minus.size()
                               ? r.lambda_minus.cwiseAbs().maxCoeff()
                               : 0.0;
  j["fictitious_switch"] = dlam_norm <= 1e-3 * (1.0 + lam_scale);
  j["wall_seconds"] = wall_seconds;
  return RunReport{std::move(j)};
}

void write_trajectory_table(const std::filesystem::path& path,
                            const OdeTrajectory& x, const OdeTrajectory& lam,
                            const std::vector<Vec>& u) {
  std::string s;
  const Eigen::Index n = x.values.empty() ? 0 : x.values.front().size();
  const Eigen::Index m = u.empty() ? 0 : u.front().size();
  s += "t";
  for (Eigen::Index i = 0; i < n; ++i) s += "\tx" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < n; ++i) s += "\tlambda" + std::to_string(i + 1);
  for (Eigen::Index i = 0; i < m; ++i) s += "\tu" + std::to_string(i + 1);
  s += "\n";
  for (size_t k = 0; k < x.times.size(); ++k) {
    s += fmt17(x.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) s += "\t" + fmt17(x.values[k](i));
    for (Eigen::Index i = 0; i < n; ++i) s += "\t" + fmt17(lam.values[k](i));
    for (Eigen::Index i = 0; i < m; ++i) s += "\t" + fmt17(u[k](i));
    s += "\n";
  }
  write_text(path, s);
}

void write_solution_tables(const std::filesystem::path& dir,
                           const std::string& stem, const TwoPhaseSolution& sol) {
  std::filesystem::create_directories(dir);
  write_trajectory_table(dir / (stem + "-phase1.tsv"), sol.x1, sol.lam1, sol.u1);
  write_trajectory_table(dir / (stem + "-phase2.tsv"), sol.x2, sol.lam2, sol.u2);
}

void write_j_surface(const std::filesystem::path& path, const OracleResult& r) {
  std::string s = "tau\tparam";
  const Eigen::Index n = r.x_s_star.size();
  for (Eigen::Index i = 0; i < n; ++i) s += "\txs" + std::to_string(i + 1);
  s += "\tJ\tok\n";
  auto row = [&](const SweepCell& c) {
    s += fmt17(c.tau) + "\t" + fmt17(c.param);
    for (Eigen::Index i = 0; i < n; ++i)
      s += "\t" + (i < c.x_s.size() ? fmt17(c.x_s(i)) : std::string("nan"));
    s += "\t" + (c.ok ? fmt17(c.J) : std::string("nan"));
    s += c.ok ? "\t1\n" : "\t0\n";
  };
  for (const auto& c : r.J_surface) row(c);
  for (const auto& c : r.failures) row(c);
  write_text(path, s);
}

void write_error_series(const std::filesystem::path& path, const GelTrace& trace,
                        double tau_ref) {
  std::string s = "iteration\ttau\tabs_error\n";
  for (const auto& it : trace.records)
    s += std::to_string(it.k) + "\t" + fmt17(it.tau) + "\t" +
         fmt17(absolute_error(it.tau, tau_ref)) + "\n";
  write_text(path, s);
}

std::vector<ReferenceRow> published_reference_rows(const std::string& problem) {
  if (problem == "ex1-scalar-tv")
    return {
        {"ICLOCS2", 0.7495, "", "0.5558", "-", "-"},
        {"HMPMAS", 0.7230, "(0.2368)", "n/a", "31.0038", "19"},
        {"GEL", 0.7495, "", "0.5558", "16.8556", "5"},
    };
  if (problem == "ex2-linear-terminal")
    return {
        {"ICLOCS2", 1.1624, "(4.5556, 2.4444)", "0.1130", "-", "-"},
        {"HMPMAS", 1.1630, "(4.5456, 2.4326)", "n/a", "83.1040", "20"},
        {"GEL", 1.1625, "(4.5562, 2.4438)", "0.1130", "21.3326", "5"},
    };
  if (problem == "ex3-bilinear-tv")
    return {
        {"ICLOCS", 1.0000, "", "0", "-", "-"},
        {"HMPMAS", 0.9678, "", "0.0032", "576.2577", "102"},
        {"GEL", 1.0004, "", "8.1008e-04", "45.2587", "5"},
    };
  if (problem == "circle-tiv")
    return {{"reference", 0.8881, "", "0.7382", "-", "-"}};
  if (problem == "linear-tv")
    return {{"reference", 0.4790, "", "1.1539", "-", "-"}};
  return {};
}

}  // namespace swopt
