#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "swopt/gel.hpp"
#include "swopt/oracle.hpp"

namespace swopt {

using Json = nlohmann::ordered_json;

/// Structured result of one solver run; serializes to a stable,
/// schema-versioned JSON document.
struct RunReport {
  Json doc;

  std::string dump() const { return doc.dump(2) + "\n"; }
};

std::string params_hash(const Json& resolved_params);

RunReport report_from_gel(const SwitchedOCP& p, const GelResult& r,
                          const std::string& hash, double wall_seconds);
RunReport report_from_oracle(const SwitchedOCP& p, const OracleResult& r,
                             const std::string& hash, double wall_seconds);

/// Format one double with 17 significant digits.
std::string fmt17(double v);

/// Delimited trajectory tables (time, x, lambda, u per phase), one-line
/// header, 17 significant digits.
void write_trajectory_table(const std::filesystem::path& path,
                            const OdeTrajectory& x, const OdeTrajectory& lam,
                            const std::vector<Vec>& u);
void write_solution_tables(const std::filesystem::path& dir,
                           const std::string& stem, const TwoPhaseSolution& sol);

/// tau, param, x_s..., J, status rows of a sweep.
void write_j_surface(const std::filesystem::path& path, const OracleResult& r);

/// Absolute switching-time error per outer iteration.
void write_error_series(const std::filesystem::path& path, const GelTrace& trace,
                        double tau_ref);

/// Published reference rows for the comparison table (static data).
struct ReferenceRow {
  std::string method;
  double tau;
  std::string x_s;    // empty when not reported
  std::string J;      // textual: may be "n/a"
  std::string time_s; // machine-specific; reported as-is
  std::string iterations;
};
std::vector<ReferenceRow> published_reference_rows(const std::string& problem);

}  // namespace swopt
