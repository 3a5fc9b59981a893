#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swopt/problem.hpp"

namespace swopt {

/// Solver settings a problem file may carry; command-line flags win over
/// these.
struct SolverOverrides {
  std::optional<double> tau0, tol, delta_tau, alpha;
  std::optional<int> segments, grid, workers;
  std::optional<std::string> integrator;    // "rk4" | "rkf45"
  std::optional<std::string> formulation;   // "jump-magnitude" | "interface"
};

struct LoadedProblem {
  SwitchedOCP problem;
  nlohmann::ordered_json resolved;  // canonical resolved parameters
  SolverOverrides overrides;
};

/// Declarative problem document: names a registered dynamics template and
/// supplies numeric parameters. Throws ParseError with a field-located
/// message on invalid input.
LoadedProblem load_problem_file(const std::filesystem::path& path);

/// Same, from an already-parsed document (location used in error messages).
LoadedProblem load_problem_json(const nlohmann::ordered_json& doc,
                                const std::string& location);

/// All *.json problem files in a directory, sorted by name.
std::vector<std::filesystem::path> scan_problem_dir(
    const std::filesystem::path& dir);

}  // namespace swopt
