#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riccati/bench_gen.hpp"
#include "riccati/lyapunov.hpp"
#include "riccati/newton.hpp"

namespace riccati::cli {

// Inline dense data for small problems.
struct InlineMatrices {
  DenseMatrix a, e, b, c, q, r, s;
};

// Exactly one of generator, bundle or matrices is set.
struct RunConfig {
  std::string name;
  std::optional<BenchmarkSpec> generator;
  std::optional<std::filesystem::path> bundle;
  std::optional<InlineMatrices> matrices;
  NewtonOptions newton;
  AdiOptions adi;
  bool reformulated = false;
  std::filesystem::path out_dir;
};

// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<double> tol;
  std::optional<std::string> line_search;
  std::optional<std::string> inexact;
  std::optional<std::uint64_t> seed;
};

// Parses a JSON document; syntax errors become ConfigError with the origin,
// line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json load_json(const std::filesystem::path& path);

// Unknown or mistyped fields raise ConfigError naming the field path.
RunConfig parse_run_config(const nlohmann::json& doc);

// Bench sweeps: {"runs": [...], ...}; top-level fields other than "runs" are
// defaults merged under every run.
std::vector<RunConfig> parse_sweep(const nlohmann::json& doc);

void apply(const Overrides& overrides, RunConfig& config);

GeneratedProblem load_problem(const RunConfig& config);

}  // namespace riccati::cli
