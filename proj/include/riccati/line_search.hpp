#pragma once

#include <array>

#include "riccati/ldl_factor.hpp"
#include "riccati/linalg.hpp"

namespace riccati {

using TraceCoefficients = std::array<double, 6>;

enum class LineSearchMode { off, exact, armijo };

struct LineSearchData {
  TraceCoefficients v{};
  std::array<double, 4> a_hat{};
  double xi = 1.0;
  bool accepted = true;
  // Set when no admissible critical point existed and xi fell back to 1.
  bool fallback = false;
};

// v1..v6 for f(xi) = ||R(X_k + xi N_k)||_F^2 from the Riccati residual
// (U_k, D_k) at X_k, the Lyapunov residual (F, G) at X_{k+1} and the feedback
// change delta_k = K_{k+1} - K_k (m x n).
TraceCoefficients trace_coefficients(const ResidualFactor& riccati_res,
                                     const ResidualFactor& lyap_res,
                                     const DenseMatrix& delta_k,
                                     const DenseMatrix& r);

// (1-xi)^2 v1 + xi^2 v2 + xi^4 v3 + 2 xi (1-xi) v4 - 2 xi^2 (1-xi) v5 - 2 xi^3 v6
double quartic_eval(const TraceCoefficients& v, double xi);

// Coefficients of f'(xi) = a1 + a2 xi + a3 xi^2 + a4 xi^3.
std::array<double, 4> derivative_coefficients(const TraceCoefficients& v);

// Minimizer of the quartic over the critical points in (0, 2].
LineSearchData exact_step(const TraceCoefficients& v);

// ||R_new|| < (1 - xi beta) ||R_old||
bool sufficient_decrease(double res_new, double res_old, double xi, double beta);

// Backtracking from xi = 1 by halving on the predicted residual.
LineSearchData armijo_step(const TraceCoefficients& v, double beta);

// Residual factor of X_k + xi (X_{k+1} - X_k) with feedback
// (1-xi) K_k + xi K_{k+1}:
// [U_k, F, delta_k^T] with kernel blkdiag((1-xi) D_k, xi G, -xi^2 R).
ResidualFactor damped_residual(const ResidualFactor& riccati_res,
                               const ResidualFactor& lyap_res,
                               const DenseMatrix& delta_k, const DenseMatrix& r,
                               double xi);

}  // namespace riccati
