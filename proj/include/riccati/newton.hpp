#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riccati/care_forms.hpp"
#include "riccati/coefficients.hpp"
#include "riccati/line_search.hpp"
#include "riccati/lyapunov.hpp"
#include "riccati/report.hpp"

namespace riccati {

enum class InexactMode { off, superlinear, quadratic };
enum class InnerSolver { automatic, dense, adi };

std::string to_string(LineSearchMode mode);
std::string to_string(InexactMode mode);
LineSearchMode line_search_from_string(const std::string& name);
InexactMode inexact_from_string(const std::string& name);

struct NewtonOptions {
  // Stop once ||R(X_k)||_F / ||C^T Q C - S R^{-1} S^T||_2 drops below this.
  double outer_tol = 1e-12;
  int max_steps = 50;
  LineSearchMode line_search = LineSearchMode::off;
  InexactMode inexact = InexactMode::off;
  double beta = 1e-4;
  // Stabilizing K_0 of the original equation (m x n).
  std::optional<DenseMatrix> initial_feedback;
  // automatic: dense Lyapunov solves up to kDenseThreshold, LR-ADI above.
  InnerSolver inner = InnerSolver::automatic;
  // Closed-loop and X_k - X_{k-1} eigenvalues are recorded up to this n.
  Index diagnostics_max_n = kDenseThreshold;
  bool keep_iterates = false;
  // When false, a run that hits max_steps returns with converged = false.
  bool throw_on_max_steps = true;
  std::string name;

  void validate() const;
};

struct NewtonState {
  int k = 0;
  DenseMatrix feedback;             // K_k of the original equation
  LdlFactor solution;               // X_k
  ResidualFactor lyap_residual;     // (F_k, G_k)
  ResidualFactor riccati_residual;  // (U_k, D_k)
  double res1 = 0.0;
};

struct NewtonResult {
  LdlFactor solution;
  DenseMatrix feedback;
  RunReport report;
  bool converged = false;
  NewtonState state;  // final step
  // Every step when keep_iterates is set.
  std::vector<NewtonState> history;
};

// K_0 with a Hurwitz closed-loop pencil: zero when (A, E) is already Hurwitz,
// otherwise the feedback of the stabilizing solution of the Bernoulli
// equation of A - B R^{-1} S^T. Dense, n <= kDenseThreshold; for larger n a
// zero feedback is returned unverified.
DenseMatrix initial_feedback(const CoefficientSet& coeffs);

NewtonResult newton_solve(const CoefficientSet& coeffs, const NewtonOptions& opts,
                          const AdiOptions& adi = {});

// Same iteration on the S-free form; feedbacks are reported for the original
// equation (K_hat + V^T).
NewtonResult newton_solve(const ReformulatedSet& coeffs, const NewtonOptions& opts,
                          const AdiOptions& adi = {});

// R(X_k) = F_k G_k F_k^T - dK^T R dK with dK = K_k - prev_feedback.
ResidualFactor riccati_residual_factor(const CoefficientSet& coeffs,
                                       const NewtonState& state,
                                       const DenseMatrix& prev_feedback);

}  // namespace riccati
