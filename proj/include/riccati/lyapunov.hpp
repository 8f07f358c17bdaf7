#pragma once

#include <string>
#include <vector>

#include "riccati/ldl_factor.hpp"
#include "riccati/linalg.hpp"

namespace riccati {

// op^T X E + E^T X op + G T G^T = 0 with rhs = (G, T).
struct LyapunovProblem {
  LowRankUpdatedOperator op;
  SparseMatrix massmat;
  ResidualFactor rhs;
};

enum class ShiftStrategy { heuristic_penzl, projection_adaptive };

struct AdiOptions {
  int max_iters = 500;
  // Stop once ||residual||_2 / ||rhs||_2 drops below this value.
  double res_tol = 1e-13;
  ShiftStrategy shift_strategy = ShiftStrategy::projection_adaptive;
  int shift_count = 6;
  // Also stop once ||residual||_F drops below this value; ignored when 0.
  double abs_fro_tol = 0.0;
  // Stagnation below this relative residual ends the iteration quietly
  // (roundoff level); above it Stagnation is thrown.
  double stagnation_floor = 1e-10;
  // Per-iteration CSV trace (iter, residual, shift real, shift imag).
  std::string trace_path;
  ShiftedSolverOptions solver;
};

struct LyapunovResult {
  LdlFactor solution;
  ResidualFactor residual;
  std::vector<double> history;
  int iterations = 0;
};

LyapunovResult solve_lr_adi(const LyapunovProblem& problem,
                            const AdiOptions& opts);

std::vector<Complex> compute_shifts(const LyapunovProblem& problem,
                                    const AdiOptions& opts);

// Penzl's min-max selection of up to count shifts from stable candidates.
// Conjugate pairs are never split, so fewer than count may be returned.
std::vector<Complex> select_shifts(const std::vector<Complex>& candidates,
                                   int count);

// Dense Bartels-Stewart solve of a^T X e + e^T X a + m = 0.
DenseMatrix solve_dense_lyapunov(const DenseMatrix& a, const DenseMatrix& e,
                                 const DenseMatrix& m);

// Direct dense solve. Small problems go through the literal Kronecker
// system; larger ones through Bartels-Stewart.
DenseMatrix solve_kron(const LyapunovProblem& problem);
inline constexpr Index kKroneckerMaxOrder = 30;

// Dense solve whose result is returned in factored form together with the
// exact residual of the factored (compressed) solution.
LyapunovResult solve_dense_factored(const LyapunovProblem& problem,
                                    double compress_tol);

// Dense residual op^T X E + E^T X op + G T G^T.
DenseMatrix lyapunov_residual(const LyapunovProblem& problem,
                              const DenseMatrix& x);

bool pencil_is_hurwitz(const LyapunovProblem& problem);

}  // namespace riccati
