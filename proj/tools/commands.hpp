#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "config.hpp"

namespace riccati::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

// Solves one problem and writes solution.{L,D}.mtx, solution.json,
// feedback.mtx, report.json and history.csv into config.out_dir.
int cmd_solve(const RunConfig& config, std::ostream& out);

// The three 2x2 indefinite examples against the dense solver, with their
// reference values checked; nonzero exit lists the failed checks.
int cmd_paper_suite(const std::optional<std::filesystem::path>& out_dir, std::ostream& out);

// One table row per run (example, method, res1, res2, res3, iterations);
// writes bench.md, bench.csv and one report per run when out_dir is set.
int cmd_bench(const std::vector<RunConfig>& runs, const std::filesystem::path& out_dir,
              std::ostream& out);

// Writes the problem of a generator config as a MatrixMarket bundle.
int cmd_gen(const RunConfig& config, std::ostream& out);

// Full command line; errors are reported on err.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace riccati::cli
