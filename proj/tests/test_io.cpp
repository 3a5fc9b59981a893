#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "swopt/gel.hpp"
#include "swopt/problem_file.hpp"
#include "swopt/registry.hpp"
#include "swopt/report.hpp"
#include "test_support.hpp"

using namespace swopt;
using namespace swopt::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("swopt-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("problem file round trip: degenerate identical modes") {
  TempDir tmp;
  const fs::path file = tmp.path / "degenerate.json";
  write_file(file, R"({
    "template": "two-gain-integrator",
    "name": "degenerate-identical",
    "gain1": 1.0, "gain2": 1.0, "w1": 0.5, "w2": 0.5,
    "x0": [0, 0], "xf": [2, 2], "tf": 2.0,
    "interface": {"kind": "linear", "m": [1, 1], "mu": 0.0, "c": -2.0},
    "solver": {"tau0": 0.9, "segments": 6}
  })");
  const LoadedProblem lp = load_problem_file(file);
  CHECK(lp.problem.name == "degenerate-identical");
  CHECK(lp.problem.n == 2);
  CHECK(lp.overrides.tau0 == 0.9);
  CHECK(lp.overrides.segments == 6);
  CHECK(lp.resolved["w1"] == 0.5);

  // solves like the built-in degenerate fixture: fictitious switch
  GelConfig cfg;
  cfg.tau0 = *lp.overrides.tau0;
  const GelResult r = solve_gel(lp.problem, cfg, ShootingConfig{});
  CHECK(r.converged);
  CHECK(std::abs(r.tau_star - kDegenerateCrossing) <= 1e-3);
  CHECK(r.delta_lambda_empirical.cwiseAbs().maxCoeff() <= 3e-4);

  const RunReport report = report_from_gel(lp.problem, r,
                                           params_hash(lp.resolved), 0.1);
  CHECK(report.doc["fictitious_switch"] == true);
}

TEST_CASE("problem files accept registry templates with overrides") {
  TempDir tmp;
  const fs::path file = tmp.path / "wide-circle.json";
  write_file(file, R"({
    "template": "circle-tiv",
    "name": "wide-circle",
    "interface": {"kind": "unit-circle", "radius": 1.25}
  })");
  const LoadedProblem lp = load_problem_file(file);
  CHECK(lp.problem.interface.g(vec2(1.25, 0), 0.0) == doctest::Approx(0.0));
  CHECK(lp.problem.interface.g(vec2(1, 0), 0.0) < 0.0);
  CHECK(lp.resolved["interface"]["radius"] == 1.25);
}

TEST_CASE("problem file errors carry a location") {
  TempDir tmp;
  const fs::path no_template = tmp.path / "a.json";
  write_file(no_template, R"({"x0": [0,0]})");
  CHECK_THROWS_AS(load_problem_file(no_template), ParseError);
  try {
    load_problem_file(no_template);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("template") != std::string::npos);
  }

  const fs::path bad_kind = tmp.path / "b.json";
  write_file(bad_kind, R"({
    "template": "linear-tv",
    "interface": {"kind": "parabola"}
  })");
  CHECK_THROWS_AS(load_problem_file(bad_kind), ParseError);

  const fs::path ragged = tmp.path / "c.json";
  write_file(ragged, R"({
    "template": "ex2-linear-terminal",
    "A1": [[1, 0], [0]]
  })");
  CHECK_THROWS_AS(load_problem_file(ragged), ParseError);

  const fs::path invalid = tmp.path / "d.json";
  write_file(invalid, R"({
    "template": "ex1-scalar-tv",
    "x0": 5.0
  })");
  // x0 = 5 puts the initial state on the wrong side of x + t = 1
  CHECK_THROWS_AS(load_problem_file(invalid), ParseError);

  const fs::path not_json = tmp.path / "e.json";
  write_file(not_json, "{nope");
  CHECK_THROWS_AS(load_problem_file(not_json), ParseError);
}

TEST_CASE("scan_problem_dir lists json files sorted") {
  TempDir tmp;
  write_file(tmp.path / "b.json", "{}");
  write_file(tmp.path / "a.json", "{}");
  write_file(tmp.path / "ignore.txt", "");
  const auto files = scan_problem_dir(tmp.path);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.json");
  CHECK(files[1].filename() == "b.json");
  CHECK(scan_problem_dir(tmp.path / "missing").empty());
}

TEST_CASE("run report serialization round-trips byte for byte") {
  SwitchedOCP p = registry_get("ex1-scalar-tv");
  GelConfig cfg;
  const GelResult r = solve_gel(p, cfg, ShootingConfig{});
  const RunReport report = report_from_gel(p, r, "abc123", 0.25);
  const std::string once = report.dump();
  const Json parsed = Json::parse(once);
  const std::string twice = RunReport{parsed}.dump();
  CHECK(once == twice);
  CHECK(parsed["schema"] == "swopt.run-report/1");
  CHECK(parsed["solver"] == "gel");
  CHECK(parsed["converged"] == true);
  CHECK(parsed["trace"].size() >= 2);
}

TEST_CASE("identical inputs with the fixed-step integrator reproduce bitwise") {
  SwitchedOCP p = registry_get("ex1-scalar-tv");
  ShootingConfig shooting;
  shooting.integrator.method = IntegrationMethod::rk4_fixed;
  GelConfig cfg;
  const GelResult a = solve_gel(p, cfg, shooting);
  const GelResult b = solve_gel(p, cfg, shooting);
  const Json ja = report_from_gel(p, a, "h", 0.0).doc;
  const Json jb = report_from_gel(p, b, "h", 0.0).doc;
  // wall time is the only field allowed to differ; it is passed equal here
  CHECK(ja.dump() == jb.dump());
  CHECK(a.tau_star == b.tau_star);
  CHECK(a.J_star == b.J_star);
}

TEST_CASE("fmt17 and params_hash") {
  CHECK(fmt17(0.5) == "0.5");
  CHECK(std::stod(fmt17(1.0 / 3.0)) == 1.0 / 3.0);  // 17 digits round-trip
  Json a, b;
  a["x"] = 1.0;
  b["x"] = 2.0;
  CHECK(params_hash(a) != params_hash(b));
  CHECK(params_hash(a) == params_hash(a));
  CHECK(params_hash(a).size() == 16);
}

TEST_CASE("delimited outputs have headers and full rows") {
  TempDir tmp;
  SwitchedOCP p = registry_get("ex1-scalar-tv");
  GelConfig cfg;
  const GelResult r = solve_gel(p, cfg, ShootingConfig{});

  write_solution_tables(tmp.path, "ex1", r.solution);
  std::ifstream in(tmp.path / "ex1-phase1.tsv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t\tx1\tlambda1\tu1");
  size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == r.solution.x1.times.size());

  write_error_series(tmp.path / "err.tsv", r.trace, r.tau_star);
  std::ifstream err(tmp.path / "err.tsv");
  std::getline(err, header);
  CHECK(header == "iteration\ttau\tabs_error");
}

TEST_CASE("published reference rows are available for the table problems") {
  const auto rows = published_reference_rows("ex1-scalar-tv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].method == "GEL");
  CHECK(rows[2].tau == 0.7495);
  CHECK(rows[1].J == "n/a");
  CHECK(published_reference_rows("ex3-bilinear-tv").size() == 3);
  CHECK(published_reference_rows("circle-tiv").size() == 1);
  CHECK(published_reference_rows("unknown").empty());
}
