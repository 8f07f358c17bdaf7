#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "riccati/care_forms.hpp"
#include "riccati/errors.hpp"
#include "riccati/log.hpp"
#include "riccati/matrix_market.hpp"

namespace riccati::cli {

namespace {

namespace fs = std::filesystem;

NewtonResult solve(const GeneratedProblem& problem, const RunConfig& config) {
  NewtonOptions opts = config.newton;
  opts.throw_on_max_steps = false;
  opts.name = problem.name;
  if (config.reformulated) return newton_solve(reformulate(problem.coeffs), opts, config.adi);
  return newton_solve(problem.coeffs, opts, config.adi);
}

void write_outputs(const fs::path& dir, const NewtonResult& result, double tol) {
  fs::create_directories(dir);
  save_factor(dir / "solution", result.solution, tol);
  write(dir / "feedback.mtx", result.feedback);
  result.report.write_json(dir / "report.json");
  result.report.write_csv(dir / "history.csv");
}

std::string method_label(const RunConfig& config) {
  std::string label = "newton";
  if (config.newton.line_search != LineSearchMode::off) {
    label += "+" + to_string(config.newton.line_search) + "-ls";
  }
  if (config.newton.inexact != InexactMode::off) {
    label += "+inexact-" + to_string(config.newton.inexact);
  }
  if (config.reformulated) label += " (reformulated)";
  return label;
}

std::string format_complex(Complex z) {
  if (z.imag() == 0.0) return fmt::format("{:.4f}", z.real());
  return fmt::format("{:.4f}{:+.4f}i", z.real(), z.imag());
}

std::string join_values(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

// ---------------------------------------------------------------------------
// Reference values of the three small examples.

struct Reference {
  int steps;
  std::vector<double> res1;  // leading steps; the final step only has the bound
  std::vector<double> first_closed_loop;
  std::vector<double> final_closed_loop;
  int diff_sign;  // sign of every eigenvalue of X_k - X_{k-1}, 0 when unchecked
  int diff_step;  // only this step when positive
};

const std::array<Reference, 3>& references() {
  static const std::array<Reference, 3> refs{{
      {5, {5.3610e-01, 3.5593e-02, 6.0872e-05, 1.5903e-10}, {}, {-4.2451, -1.4068}, 0, 0},
      {5, {}, {-7.8315, 2.3071}, {-4.0448, -1.4626}, 1, 5},
      {6, {}, {}, {}, -1, 0},
  }};
  return refs;
}

constexpr double kFinalRes1 = 1e-13;
constexpr double kEigTol = 1e-3;
constexpr double kReldiffTol = 1e-10;

bool two_digits(double got, double want) {
  const double unit = std::pow(10.0, std::floor(std::log10(want)) - 1.0);
  return std::abs(got - want) <= 0.5 * unit;
}

bool eigs_match(const std::vector<Complex>& got, const std::vector<double>& want) {
  if (got.size() != want.size()) return false;
  std::vector<double> re;
  for (Complex z : got) {
    if (std::abs(z.imag()) > kEigTol) return false;
    re.push_back(z.real());
  }
  std::sort(re.begin(), re.end());
  for (std::size_t i = 0; i < re.size(); ++i) {
    if (std::abs(re[i] - want[i]) > kEigTol) return false;
  }
  return true;
}

std::vector<std::string> check_example(int which, const NewtonResult& run, double reldiff_value) {
  const Reference& ref = references()[std::size_t(which - 1)];
  const auto& steps = run.report.steps;
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(fmt::format("example {}: {}", which, what));
  };
  const int count = int(steps.size());
  check(std::abs(count - ref.steps) <= 1,
        fmt::format("{} Newton steps, expected {} +- 1", count, ref.steps));
  for (std::size_t i = 0; i < ref.res1.size() && i < steps.size(); ++i) {
    check(two_digits(steps[i].res1, ref.res1[i]),
          fmt::format("step {} res1 {:.4e}, expected {:.4e}", i + 1, steps[i].res1, ref.res1[i]));
  }
  check(!steps.empty() && steps.back().res1 <= kFinalRes1,
        fmt::format("final res1 {:.3e} above {:.0e}", steps.back().res1, kFinalRes1));
  if (!ref.first_closed_loop.empty()) {
    check(eigs_match(steps.front().closed_loop, ref.first_closed_loop),
          "step 1 closed-loop eigenvalues differ from the reference");
  }
  if (!ref.final_closed_loop.empty()) {
    check(eigs_match(steps.back().closed_loop, ref.final_closed_loop),
          "final closed-loop eigenvalues differ from the reference");
  }
  if (ref.diff_sign < 0) {
    for (const StepRecord& s : steps) {
      check(s.closed_loop_stable, fmt::format("step {} closed loop not Hurwitz", s.k));
      for (double x : s.diff_eigs) {
        check(x < 0.0, fmt::format("step {} difference eigenvalue {:.3e} not negative", s.k, x));
      }
    }
  } else if (ref.diff_sign > 0) {
    const int k = ref.diff_step;
    check(count >= k, fmt::format("no step {}", k));
    if (count >= k) {
      for (double x : steps[std::size_t(k - 1)].diff_eigs) {
        check(x > 0.0, fmt::format("step {} difference eigenvalue {:.3e} not positive", k, x));
      }
    }
  }
  check(reldiff_value <= kReldiffTol,
        fmt::format("reldiff to the dense solution {:.3e} above {:.0e}", reldiff_value, kReldiffTol));
  return failed;
}

void print_steps(const NewtonResult& run, std::ostream& out) {
  out << fmt::format("  {:>2}  {:>11}  {:<34}  {}\n", "k", "res1", "closed-loop eigenvalues",
                     "eig(X_k - X_k-1)");
  for (const StepRecord& s : run.report.steps) {
    std::vector<std::string> cl, diff;
    for (Complex z : s.closed_loop) cl.push_back(format_complex(z));
    for (double x : s.diff_eigs) diff.push_back(fmt::format("{:.4e}", x));
    out << fmt::format("  {:>2}  {:>11.4e}  {:<34}  {}{}\n", s.k, s.res1, join_values(cl),
                       diff.empty() ? "-" : join_values(diff),
                       s.closed_loop_stable ? "" : "  (unstable closed loop)");
  }
}

void write_table(const std::vector<std::array<std::string, 6>>& rows, std::ostream& md,
                 std::ostream* csv) {
  const std::array<std::string, 6> head{"example", "method", "res1", "res2", "res3",
                                        "iterations"};
  std::array<std::size_t, 6> width{};
  for (std::size_t c = 0; c < 6; ++c) {
    width[c] = head[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::array<std::string, 6>& cells) {
    md << "|";
    for (std::size_t c = 0; c < 6; ++c) md << " " << fmt::format("{:<{}}", cells[c], width[c]) << " |";
    md << "\n";
  };
  line(head);
  md << "|";
  for (std::size_t c = 0; c < 6; ++c) md << std::string(width[c] + 2, '-') << "|";
  md << "\n";
  for (const auto& r : rows) line(r);
  if (csv) {
    *csv << "example,method,res1,res2,res3,iterations\n";
    for (const auto& r : rows) {
      *csv << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << ',' << r[4] << ',' << r[5]
           << '\n';
    }
  }
}

}  // namespace

int cmd_solve(const RunConfig& config, std::ostream& out) {
  const GeneratedProblem problem = load_problem(config);
  const NewtonResult result = solve(problem, config);
  const fs::path dir = config.out_dir.empty() ? fs::path("out") : config.out_dir;
  write_outputs(dir, result, config.newton.outer_tol);
  const CareMetrics& m = *result.report.final_metrics;
  out << fmt::format("{}: {} after {} Newton steps, n = {}, rank {}\n", problem.name,
                     result.converged ? "converged" : "not converged",
                     result.report.steps.size(), problem.coeffs.n(), result.solution.rank());
  out << fmt::format("res1 {:.4e}  res2 {:.4e}  res3 {:.4e}\n", m.res1, m.res2, m.res3);
  out << "results written to " << dir.string() << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_paper_suite(const std::optional<fs::path>& out_dir, std::ostream& out) {
  std::vector<std::string> failed;
  for (int which = 1; which <= 3; ++which) {
    const CoefficientSet coeffs = convergence_example(which);
    NewtonOptions opts;
    opts.throw_on_max_steps = false;
    opts.name = fmt::format("example-{}", which);
    const NewtonResult run = newton_solve(coeffs, opts);
    const DenseMatrix oracle = dense_care_oracle(coeffs);
    const double rd = reldiff(run.solution.to_dense(), oracle);

    out << fmt::format("Example {}\n", which);
    print_steps(run, out);
    const CareMetrics mn = *run.report.final_metrics;
    const CareMetrics mo = metrics(coeffs, oracle);
    out << fmt::format("  {:<8}  {:>11}  {:>11}  {:>11}\n", "solver", "res1", "res2", "res3");
    out << fmt::format("  {:<8}  {:>11.4e}  {:>11.4e}  {:>11.4e}\n", "newton", mn.res1, mn.res2,
                       mn.res3);
    out << fmt::format("  {:<8}  {:>11.4e}  {:>11.4e}  {:>11.4e}\n", "dense", mo.res1, mo.res2,
                       mo.res3);
    out << fmt::format("  reldiff(newton, dense) = {:.4e}\n\n", rd);

    if (out_dir) {
      const fs::path dir = *out_dir / opts.name;
      write_outputs(dir, run, opts.outer_tol);
      write(dir / "dense_solution.mtx", oracle);
    }
    const auto f = check_example(which, run, rd);
    failed.insert(failed.end(), f.begin(), f.end());
  }
  if (failed.empty()) {
    out << "all checks passed\n";
    return kExitOk;
  }
  out << "failed checks:\n";
  for (const auto& f : failed) out << "  " << f << "\n";
  return kExitError;
}

int cmd_bench(const std::vector<RunConfig>& runs, const fs::path& out_dir, std::ostream& out) {
  if (runs.empty()) throw ConfigError("bench: the sweep has no runs");
  std::vector<std::array<std::string, 6>> rows;
  std::vector<std::string> unconverged;
  for (const RunConfig& config : runs) {
    const GeneratedProblem problem = load_problem(config);
    log().info("bench: {} (n = {})", problem.name, problem.coeffs.n());
    const NewtonResult result = solve(problem, config);
    const CareMetrics& m = *result.report.final_metrics;
    rows.push_back({problem.name, method_label(config), fmt::format("{:.4e}", m.res1),
                    fmt::format("{:.4e}", m.res2), fmt::format("{:.4e}", m.res3),
                    std::to_string(result.report.steps.size())});
    if (!result.converged) unconverged.push_back(problem.name);
    if (!out_dir.empty()) write_outputs(out_dir / problem.name, result, config.newton.outer_tol);
  }
  write_table(rows, out, nullptr);
  if (!out_dir.empty()) {
    std::ofstream md(out_dir / "bench.md");
    std::ofstream csv(out_dir / "bench.csv");
    write_table(rows, md, &csv);
  }
  if (unconverged.empty()) return kExitOk;
  out << "not converged: " << join_values(unconverged) << "\n";
  return kExitNotConverged;
}

int cmd_gen(const RunConfig& config, std::ostream& out) {
  if (!config.generator) throw ConfigError("gen: the config must name a generator");
  const GeneratedProblem problem = load_problem(config);
  const fs::path dir = config.out_dir.empty() ? fs::path(problem.name) : config.out_dir;
  write_bundle(dir, problem);
  out << fmt::format("{}: n = {}, m = {}, p = {}, family {} written to {}\n", problem.name,
                     problem.coeffs.n(), problem.coeffs.m(), problem.coeffs.p(),
                     to_string(problem.family), dir.string());
  return kExitOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Newton-Kleinman solver for algebraic Riccati equations with indefinite terms"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides overrides;
  std::string out_path, line_search, inexact;

  auto add_common = [&](CLI::App* cmd, bool solver_flags) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--out", out_path, "output directory");
    cmd->add_option("--seed", overrides.seed, "seed for random generators");
    if (solver_flags) {
      cmd->add_option("--tol", overrides.tol, "Newton residual tolerance (res1)")
          ->check(CLI::PositiveNumber);
      cmd->add_option("--line-search", line_search, "off, exact or armijo")
          ->check(CLI::IsMember({"off", "exact", "armijo"}));
      cmd->add_option("--inexact", inexact, "off, superlinear or quadratic")
          ->check(CLI::IsMember({"off", "superlinear", "quadratic"}));
    }
  };
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one equation");
  CLI::App* suite_cmd = app.add_subcommand("paper-suite", "indefinite convergence study");
  CLI::App* bench_cmd = app.add_subcommand("bench", "table of metrics over a sweep");
  CLI::App* gen_cmd = app.add_subcommand("gen", "write a generated problem as MatrixMarket");
  add_common(solve_cmd, true);
  add_common(bench_cmd, true);
  add_common(gen_cmd, false);
  suite_cmd->add_option("--out", out_path, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  auto command = app.get_subcommands().front();
  if (!out_path.empty()) overrides.out = out_path;
  if (!line_search.empty()) overrides.line_search = line_search;
  if (!inexact.empty()) overrides.inexact = inexact;

  try {
    if (command == suite_cmd) {
      return cmd_paper_suite(out_path.empty() ? std::nullopt : std::optional<fs::path>(out_path),
                             out);
    }
    if (config_path.empty()) throw ConfigError(command->get_name() + " needs --config");
    const nlohmann::json doc = load_json(config_path);
    if (command == bench_cmd) {
      std::vector<RunConfig> runs = parse_sweep(doc);
      fs::path dir = doc.contains("out") ? fs::path(doc["out"].get<std::string>()) : fs::path();
      if (overrides.out) dir = *overrides.out;
      for (RunConfig& r : runs) apply(overrides, r);
      return cmd_bench(runs, dir, out);
    }
    RunConfig config = parse_run_config(doc);
    apply(overrides, config);
    if (command == gen_cmd) return cmd_gen(config, out);
    return cmd_solve(config, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace riccati::cli
