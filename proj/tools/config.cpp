#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "riccati/errors.hpp"

namespace riccati::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Rejects keys outside the allowed set so typos do not pass silently.
void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw ConfigError("field '" + (path.empty() ? std::string("<root>") : path) +
                      "': expected an object");
  }
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown field '" + join(path, item.key()) + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& err) {
    throw ConfigError("field '" + join(path, key) + "': " + err.what());
  }
}

template <typename T>
void read(const json& obj, const std::string& key, const std::string& path, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, path);
}

DenseMatrix matrix(const json& value, const std::string& field) {
  // Scalars are accepted as 1 x 1 matrices.
  if (value.is_number()) return DenseMatrix::Constant(1, 1, value.get<double>());
  if (!value.is_array() || value.empty() || !value[0].is_array()) {
    throw ConfigError("field '" + field + "': expected a list of rows");
  }
  const Index rows = Index(value.size());
  const Index cols = Index(value[0].size());
  DenseMatrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = value[std::size_t(i)];
    if (!row.is_array() || Index(row.size()) != cols) {
      throw ConfigError("field '" + field + "': rows differ in length");
    }
    for (Index j = 0; j < cols; ++j) {
      if (!row[std::size_t(j)].is_number()) {
        throw ConfigError("field '" + field + "': entries must be numbers");
      }
      out(i, j) = row[std::size_t(j)].get<double>();
    }
  }
  return out;
}

FamilySpec parse_family(const json& obj, double& gamma_factor) {
  const std::string path = "family";
  check_keys(obj, path,
             {"kind", "gamma", "gamma_factor", "feedthrough", "split", "q_tilde", "r_tilde",
              "cross"});
  FamilySpec spec;
  if (obj.contains("kind")) spec.kind = family_from_string(get<std::string>(obj, "kind", path));
  if (obj.contains("gamma")) spec.gamma = get<double>(obj, "gamma", path);
  read(obj, "gamma_factor", path, gamma_factor);
  if (obj.contains("feedthrough")) spec.feedthrough = matrix(obj["feedthrough"], "family.feedthrough");
  if (obj.contains("q_tilde")) spec.q_tilde = matrix(obj["q_tilde"], "family.q_tilde");
  if (obj.contains("r_tilde")) spec.r_tilde = matrix(obj["r_tilde"], "family.r_tilde");
  if (obj.contains("cross")) spec.cross = matrix(obj["cross"], "family.cross");
  if (obj.contains("split")) {
    const auto split = get<std::vector<Index>>(obj, "split", path);
    if (split.size() != 2) throw ConfigError("field 'family.split': expected [m1, m2]");
    spec.split = std::make_pair(split[0], split[1]);
  }
  return spec;
}

BenchmarkSpec parse_generator(const json& obj) {
  const std::string path = "problem";
  check_keys(obj, path,
             {"generator", "grid_n", "m", "p", "collocated", "masses", "damping", "n", "seed"});
  BenchmarkSpec spec;
  spec.generator = get<std::string>(obj, "generator", path);
  read(obj, "grid_n", path, spec.heat.grid_n);
  read(obj, "m", path, spec.heat.m);
  read(obj, "p", path, spec.heat.p);
  read(obj, "collocated", path, spec.heat.collocated);
  read(obj, "masses", path, spec.chain.masses);
  read(obj, "damping", path, spec.chain.damping);
  read(obj, "m", path, spec.chain.m);
  read(obj, "n", path, spec.random.n);
  read(obj, "m", path, spec.random.m);
  read(obj, "p", path, spec.random.p);
  read(obj, "seed", path, spec.random.seed);
  return spec;
}

InlineMatrices parse_matrices(const json& obj) {
  const std::string path = "problem.matrices";
  check_keys(obj, path, {"A", "E", "B", "C", "Q", "R", "S"});
  for (const char* key : {"A", "B", "C", "Q", "R"}) {
    if (!obj.contains(key)) throw ConfigError("field '" + join(path, key) + "' is required");
  }
  InlineMatrices m;
  m.a = matrix(obj["A"], "problem.matrices.A");
  m.b = matrix(obj["B"], "problem.matrices.B");
  m.c = matrix(obj["C"], "problem.matrices.C");
  m.q = matrix(obj["Q"], "problem.matrices.Q");
  m.r = matrix(obj["R"], "problem.matrices.R");
  if (obj.contains("E")) m.e = matrix(obj["E"], "problem.matrices.E");
  if (obj.contains("S")) m.s = matrix(obj["S"], "problem.matrices.S");
  return m;
}

void parse_newton(const json& obj, RunConfig& config) {
  const std::string path = "newton";
  check_keys(obj, path,
             {"tol", "max_steps", "line_search", "inexact", "beta", "formulation", "inner"});
  NewtonOptions& n = config.newton;
  read(obj, "tol", path, n.outer_tol);
  read(obj, "max_steps", path, n.max_steps);
  read(obj, "beta", path, n.beta);
  if (obj.contains("line_search")) {
    n.line_search = line_search_from_string(get<std::string>(obj, "line_search", path));
  }
  if (obj.contains("inexact")) {
    n.inexact = inexact_from_string(get<std::string>(obj, "inexact", path));
  }
  if (obj.contains("formulation")) {
    const auto f = get<std::string>(obj, "formulation", path);
    if (f != "original" && f != "reformulated") {
      throw ConfigError("field 'newton.formulation': expected original or reformulated");
    }
    config.reformulated = f == "reformulated";
  }
  if (obj.contains("inner")) {
    const auto inner = get<std::string>(obj, "inner", path);
    if (inner == "automatic") {
      n.inner = InnerSolver::automatic;
    } else if (inner == "dense") {
      n.inner = InnerSolver::dense;
    } else if (inner == "adi") {
      n.inner = InnerSolver::adi;
    } else {
      throw ConfigError("field 'newton.inner': expected automatic, dense or adi");
    }
  }
}

void parse_adi(const json& obj, AdiOptions& adi) {
  const std::string path = "adi";
  check_keys(obj, path, {"max_iters", "res_tol", "shifts", "shift_count", "trace"});
  read(obj, "max_iters", path, adi.max_iters);
  read(obj, "res_tol", path, adi.res_tol);
  read(obj, "shift_count", path, adi.shift_count);
  read(obj, "trace", path, adi.trace_path);
  if (obj.contains("shifts")) {
    const auto s = get<std::string>(obj, "shifts", path);
    if (s == "projection") {
      adi.shift_strategy = ShiftStrategy::projection_adaptive;
    } else if (s == "heuristic") {
      adi.shift_strategy = ShiftStrategy::heuristic_penzl;
    } else {
      throw ConfigError("field 'adi.shifts': expected projection or heuristic");
    }
  }
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    // The parser message carries line and column.
    throw ConfigError(origin + ": " + err.what());
  }
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path.string());
}

RunConfig parse_run_config(const json& doc) {
  check_keys(doc, "", {"name", "problem", "family", "newton", "adi", "out"});
  RunConfig config;
  read(doc, "name", "", config.name);
  if (!doc.contains("problem")) throw ConfigError("field 'problem' is required");
  const json& problem = doc["problem"];
  if (!problem.is_object()) throw ConfigError("field 'problem': expected an object");
  const int sources = int(problem.contains("generator")) + int(problem.contains("bundle")) +
                      int(problem.contains("matrices"));
  if (sources != 1) {
    throw ConfigError("field 'problem': give exactly one of generator, bundle, matrices");
  }
  double gamma_factor = 2.0;
  FamilySpec family;
  if (doc.contains("family")) family = parse_family(doc["family"], gamma_factor);
  if (problem.contains("generator")) {
    config.generator = parse_generator(problem);
    config.generator->family = family;
    config.generator->gamma_factor = gamma_factor;
    config.generator->name = config.name;
  } else {
    if (doc.contains("family")) {
      throw ConfigError("field 'family' only applies to generated problems");
    }
    if (problem.contains("bundle")) {
      check_keys(problem, "problem", {"bundle"});
      config.bundle = get<std::string>(problem, "bundle", "problem");
    } else {
      check_keys(problem, "problem", {"matrices"});
      config.matrices = parse_matrices(problem["matrices"]);
    }
  }
  if (doc.contains("newton")) parse_newton(doc["newton"], config);
  if (doc.contains("adi")) parse_adi(doc["adi"], config.adi);
  if (doc.contains("out")) config.out_dir = get<std::string>(doc, "out", "");
  config.newton.name = config.name;
  return config;
}

std::vector<RunConfig> parse_sweep(const json& doc) {
  if (!doc.is_object() || !doc.contains("runs") || !doc["runs"].is_array()) {
    throw ConfigError("field 'runs': a bench config needs a list of runs");
  }
  json defaults = doc;
  defaults.erase("runs");
  std::vector<RunConfig> out;
  std::size_t index = 0;
  for (const json& run : doc["runs"]) {
    json merged = defaults;
    merged.merge_patch(run);
    try {
      out.push_back(parse_run_config(merged));
    } catch (const ConfigError& err) {
      throw ConfigError("runs[" + std::to_string(index) + "]: " + err.what());
    }
    if (out.back().name.empty()) out.back().name = "run" + std::to_string(index);
    out.back().newton.name = out.back().name;
    ++index;
  }
  return out;
}

void apply(const Overrides& o, RunConfig& config) {
  if (o.out) config.out_dir = *o.out;
  if (o.tol) config.newton.outer_tol = *o.tol;
  if (o.line_search) config.newton.line_search = line_search_from_string(*o.line_search);
  if (o.inexact) config.newton.inexact = inexact_from_string(*o.inexact);
  if (o.seed && config.generator) config.generator->random.seed = *o.seed;
}

GeneratedProblem load_problem(const RunConfig& config) {
  GeneratedProblem out;
  if (config.generator) {
    out = generate(*config.generator);
  } else if (config.bundle) {
    out = read_bundle(*config.bundle);
  } else {
    const InlineMatrices& m = *config.matrices;
    out.coeffs = make_coefficients(m.a, m.e, m.b, m.c, m.q, m.r, m.s);
  }
  if (!config.name.empty()) out.name = config.name;
  if (out.name.empty()) out.name = "problem";
  return out;
}

}  // namespace riccati::cli
