#include "swopt/problem_file.hpp"

#include <fstream>

#include "swopt/errors.hpp"
#include "swopt/registry.hpp"

namespace swopt {

namespace {

using nlohmann::ordered_json;

double num_or(const ordered_json& j, const std::string& key, double dflt,
              const std::string& loc) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number())
    throw ParseError("expected a number for '" + key + "'", loc + "/" + key);
  return j[key].get<double>();
}

Vec vec_or(const ordered_json& j, const std::string& key, const Vec& dflt,
           const std::string& loc) {
  if (!j.contains(key)) return dflt;
  const auto& a = j[key];
  if (a.is_number()) return Vec::Constant(1, a.get<double>());
  if (!a.is_array() || a.empty())
    throw ParseError("expected an array for '" + key + "'", loc + "/" + key);
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      throw ParseError("expected numbers in '" + key + "'", loc + "/" + key);
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

Mat mat_or(const ordered_json& j, const std::string& key, const Mat& dflt,
           const std::string& loc) {
  if (!j.contains(key)) return dflt;
  const auto& a = j[key];
  if (!a.is_array() || a.empty() || !a[0].is_array())
    throw ParseError("expected a matrix (array of arrays) for '" + key + "'",
                     loc + "/" + key);
  Mat m(a.size(), a[0].size());
  for (size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != a[0].size())
      throw ParseError("ragged matrix rows in '" + key + "'", loc + "/" + key);
    for (size_t c = 0; c < a[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          a[r][c].get<double>();
  }
  return m;
}

InterfaceSpec interface_or(const ordered_json& j, const InterfaceSpec& dflt,
                           const std::string& loc) {
  if (!j.contains("interface")) return dflt;
  const auto& s = j["interface"];
  const std::string iloc = loc + "/interface";
  if (!s.is_object() || !s.contains("kind"))
    throw ParseError("interface needs a 'kind' field", iloc);
  const std::string kind = s["kind"].get<std::string>();
  if (kind == "linear") {
    LinearInterfaceSpec lin;
    if (const auto* prev = std::get_if<LinearInterfaceSpec>(&dflt)) lin = *prev;
    lin.m = vec_or(s, "m", lin.m, iloc);
    if (lin.m.size() == 0) throw ParseError("linear interface needs 'm'", iloc);
    lin.mu = num_or(s, "mu", lin.mu, iloc);
    lin.c = num_or(s, "c", lin.c, iloc);
    return lin;
  }
  if (kind == "unit-circle" || kind == "circle") {
    CircleInterfaceSpec circ;
    if (const auto* prev = std::get_if<CircleInterfaceSpec>(&dflt)) circ = *prev;
    circ.radius = num_or(s, "radius", circ.radius, iloc);
    return circ;
  }
  throw ParseError("unknown interface kind '" + kind + "'", iloc + "/kind");
}

ordered_json interface_json(const InterfaceSpec& spec) {
  ordered_json j;
  if (const auto* lin = std::get_if<LinearInterfaceSpec>(&spec)) {
    j["kind"] = "linear";
    j["m"] = std::vector<double>(lin->m.data(), lin->m.data() + lin->m.size());
    j["mu"] = lin->mu;
    j["c"] = lin->c;
  } else {
    const auto& c = std::get<CircleInterfaceSpec>(spec);
    j["kind"] = "unit-circle";
    j["radius"] = c.radius;
  }
  return j;
}

std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

SolverOverrides parse_solver(const ordered_json& j, const std::string& loc) {
  SolverOverrides o;
  if (!j.contains("solver")) return o;
  const auto& s = j["solver"];
  const std::string sloc = loc + "/solver";
  if (!s.is_object()) throw ParseError("'solver' must be an object", sloc);
  if (s.contains("tau0")) o.tau0 = s["tau0"].get<double>();
  if (s.contains("tol")) o.tol = s["tol"].get<double>();
  if (s.contains("delta_tau")) o.delta_tau = s["delta_tau"].get<double>();
  if (s.contains("alpha")) o.alpha = s["alpha"].get<double>();
  if (s.contains("segments")) o.segments = s["segments"].get<int>();
  if (s.contains("grid")) o.grid = s["grid"].get<int>();
  if (s.contains("workers")) o.workers = s["workers"].get<int>();
  if (s.contains("integrator")) o.integrator = s["integrator"].get<std::string>();
  if (s.contains("formulation"))
    o.formulation = s["formulation"].get<std::string>();
  return o;
}

}  // namespace

LoadedProblem load_problem_json(const ordered_json& doc, const std::string& loc) {
  if (!doc.is_object()) throw ParseError("problem document must be an object", loc);
  if (!doc.contains("template") || !doc["template"].is_string())
    throw ParseError("missing 'template' field", loc + "/template");
  const std::string tmpl = doc["template"].get<std::string>();

  LoadedProblem out;
  ordered_json& res = out.resolved;
  res["template"] = tmpl;

  if (tmpl == "circle-tiv" || tmpl == "linear-tv" || tmpl == "two-gain-integrator") {
    TwoGainDoubleIntegratorParams prm;
    prm.x0 = Vec::Zero(2);
    prm.xf = (Vec(2) << 2, 2).finished();
    if (tmpl == "linear-tv") {
      prm.w1 = 1.0;
      prm.w2 = 0.5;
      prm.interface = LinearInterfaceSpec{(Vec(2) << 1, 1).finished(), 1.0, -1.0};
    } else {
      prm.w1 = 0.125;
      prm.w2 = 0.5;
      prm.interface = CircleInterfaceSpec{1.0};
    }
    prm.gain1 = num_or(doc, "gain1", prm.gain1, loc);
    prm.gain2 = num_or(doc, "gain2", prm.gain2, loc);
    prm.w1 = num_or(doc, "w1", prm.w1, loc);
    prm.w2 = num_or(doc, "w2", prm.w2, loc);
    prm.x0 = vec_or(doc, "x0", prm.x0, loc);
    prm.xf = vec_or(doc, "xf", prm.xf, loc);
    prm.t0 = num_or(doc, "t0", prm.t0, loc);
    prm.tf = num_or(doc, "tf", prm.tf, loc);
    prm.interface = interface_or(doc, prm.interface, loc);
    out.problem = make_two_gain_double_integrator(prm);
    res["gain1"] = prm.gain1;
    res["gain2"] = prm.gain2;
    res["w1"] = prm.w1;
    res["w2"] = prm.w2;
    res["x0"] = to_std(prm.x0);
    res["xf"] = to_std(prm.xf);
    res["t0"] = prm.t0;
    res["tf"] = prm.tf;
    res["interface"] = interface_json(prm.interface);
  } else if (tmpl == "ex1-scalar-tv" || tmpl == "scalar-time-varying") {
    ScalarTimeVaryingParams prm;
    prm.interface = LinearInterfaceSpec{Vec::Constant(1, 1.0), 1.0, -1.0};
    prm.w1 = num_or(doc, "w1", prm.w1, loc);
    prm.w2 = num_or(doc, "w2", prm.w2, loc);
    prm.x0 = num_or(doc, "x0", prm.x0, loc);
    prm.xf = num_or(doc, "xf", prm.xf, loc);
    prm.t0 = num_or(doc, "t0", prm.t0, loc);
    prm.tf = num_or(doc, "tf", prm.tf, loc);
    prm.interface = interface_or(doc, prm.interface, loc);
    out.problem = make_scalar_time_varying(prm);
    res["w1"] = prm.w1;
    res["w2"] = prm.w2;
    res["x0"] = prm.x0;
    res["xf"] = prm.xf;
    res["t0"] = prm.t0;
    res["tf"] = prm.tf;
    res["interface"] = interface_json(prm.interface);
  } else if (tmpl == "ex2-linear-terminal" || tmpl == "linear-terminal") {
    LinearTerminalParams prm;
    prm.A1 = Mat{{1.5, 0.0}, {0.0, 1.0}};
    prm.A2 = Mat{{0.5, 0.866}, {0.866, -0.5}};
    prm.B = (Vec(2) << 1, 1).finished();
    prm.x0 = (Vec(2) << 1, 1).finished();
    prm.target = (Vec(2) << 10, 6).finished();
    prm.weights = (Vec(2) << 1, 1).finished();
    prm.interface = LinearInterfaceSpec{(Vec(2) << 1, 1).finished(), 0.0, -7.0};
    prm.A1 = mat_or(doc, "A1", prm.A1, loc);
    prm.A2 = mat_or(doc, "A2", prm.A2, loc);
    prm.B = vec_or(doc, "B", prm.B, loc);
    prm.x0 = vec_or(doc, "x0", prm.x0, loc);
    prm.target = vec_or(doc, "target", prm.target, loc);
    prm.weights = vec_or(doc, "weights", prm.weights, loc);
    prm.t0 = num_or(doc, "t0", prm.t0, loc);
    prm.tf = num_or(doc, "tf", prm.tf, loc);
    prm.interface = interface_or(doc, prm.interface, loc);
    out.problem = make_linear_terminal(prm);
    res["A1"] = {{prm.A1(0, 0), prm.A1(0, 1)}, {prm.A1(1, 0), prm.A1(1, 1)}};
    res["A2"] = {{prm.A2(0, 0), prm.A2(0, 1)}, {prm.A2(1, 0), prm.A2(1, 1)}};
    res["B"] = to_std(prm.B);
    res["x0"] = to_std(prm.x0);
    res["target"] = to_std(prm.target);
    res["weights"] = to_std(prm.weights);
    res["t0"] = prm.t0;
    res["tf"] = prm.tf;
    res["interface"] = interface_json(prm.interface);
  } else if (tmpl == "ex3-bilinear-tv" || tmpl == "scalar-bilinear") {
    ScalarBilinearParams prm;
    prm.interface = LinearInterfaceSpec{Vec::Constant(1, -1.0), std::exp(1.0), 0.0};
    prm.x0 = num_or(doc, "x0", prm.x0, loc);
    prm.xf = num_or(doc, "xf", prm.xf, loc);
    prm.t0 = num_or(doc, "t0", prm.t0, loc);
    prm.tf = num_or(doc, "tf", prm.tf, loc);
    prm.interface = interface_or(doc, prm.interface, loc);
    out.problem = make_scalar_bilinear(prm);
    res["x0"] = prm.x0;
    res["xf"] = prm.xf;
    res["t0"] = prm.t0;
    res["tf"] = prm.tf;
    res["interface"] = interface_json(prm.interface);
  } else {
    throw ParseError("unknown template '" + tmpl + "'", loc + "/template");
  }

  out.problem.name = doc.contains("name") ? doc["name"].get<std::string>() : tmpl;
  res["name"] = out.problem.name;
  out.overrides = parse_solver(doc, loc);

  try {
    out.problem.validate();
  } catch (const ContractViolation& e) {
    throw ParseError(std::string("invalid problem: ") + e.what(), loc);
  }
  return out;
}

LoadedProblem load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file", path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("JSON parse error: ") + e.what(), path.string());
  }
  return load_problem_json(doc, path.string());
}

std::vector<std::filesystem::path> scan_problem_dir(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json")
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace swopt
