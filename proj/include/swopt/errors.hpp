#pragma once

#include <stdexcept>
#include <string>

#include "swopt/types.hpp"

namespace swopt {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Precondition or dimension violation in a public call.
struct ContractViolation : SolverError {
  using SolverError::SolverError;
};

struct NotFound : SolverError {
  using SolverError::SolverError;
};

/// Newton on dH/du = 0 failed to converge.
struct StationarityFailure : SolverError {
  StationarityFailure(const std::string& msg, Vec last, double res)
      : SolverError(msg), last_iterate(std::move(last)), residual(res) {}
  Vec last_iterate;
  double residual;
};

struct StepBudgetExceeded : SolverError {
  StepBudgetExceeded(const std::string& msg, long steps)
      : SolverError(msg), steps_taken(steps) {}
  long steps_taken;
};

struct NumericalBlowup : SolverError {
  NumericalBlowup(const std::string& msg, double at_time)
      : SolverError(msg), t(at_time) {}
  double t;
};

struct BvpDiverged : SolverError {
  BvpDiverged(const std::string& msg, int iters, double res)
      : SolverError(msg), iterations(iters), residual(res) {}
  int iterations;
  double residual;
};

struct SingularJacobian : SolverError {
  SingularJacobian(const std::string& msg, double cond)
      : SolverError(msg), condition_estimate(cond) {}
  double condition_estimate;
};

/// The jump-law denominator vanished: the crossing is tangent to the
/// interface, which the jump law excludes.
struct TangentialCrossing : SolverError {
  TangentialCrossing(const std::string& msg, double den)
      : SolverError(msg), denominator(den) {}
  double denominator;
};

struct OracleExhausted : SolverError {
  using SolverError::SolverError;
};

/// Inner BVP failure surfaced by the outer switching-time iteration.
struct InnerFailure : SolverError {
  using SolverError::SolverError;
};

struct DerivativeVanished : SolverError {
  DerivativeVanished(const std::string& msg, double fprime)
      : SolverError(msg), derivative(fprime) {}
  double derivative;
};

struct ParseError : SolverError {
  ParseError(const std::string& msg, std::string loc)
      : SolverError(msg + " (at " + loc + ")"), location(std::move(loc)) {}
  std::string location;
};

}  // namespace swopt
