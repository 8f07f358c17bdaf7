#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riccati/care_forms.hpp"
#include "riccati/line_search.hpp"

namespace riccati {

struct StepRecord {
  int k = 0;
  // Stopping metric: ||R(X_k)||_F / ||C^T Q C - S R^{-1} S^T||_2.
  double res1 = 0.0;
  // Metric triple with spectral-norm numerators.
  CareMetrics metrics;
  int inner_iters = 0;
  double xi = 1.0;
  Index rank = 0;
  double wall_time = 0.0;
  // Filled when n is small enough for dense diagnostics.
  std::vector<Complex> closed_loop;
  bool closed_loop_stable = true;
  std::vector<double> diff_eigs;  // eigenvalues of X_k - X_{k-1}
  std::optional<LineSearchData> line_search;
  bool exact_restart = false;
};

struct RunReport {
  std::string name;
  bool converged = false;
  double total_time = 0.0;
  std::vector<StepRecord> steps;
  std::optional<CareMetrics> final_metrics;
  std::vector<std::string> events;

  std::string to_json() const;
  void write_json(const std::filesystem::path& path) const;
  // k, res1, xi, inner_iters, rank, wall_seconds
  void write_csv(const std::filesystem::path& path) const;
};

}  // namespace riccati
