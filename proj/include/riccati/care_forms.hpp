#pragma once

#include <optional>
#include <string>
#include <utility>

#include "riccati/coefficients.hpp"
#include "riccati/ldl_factor.hpp"

namespace riccati {

enum class Family { general, lqg, hinf, bounded_real, positive_real };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

struct FamilySpec {
  Family kind = Family::general;
  std::optional<DenseMatrix> feedthrough;  // D, p x m
  std::optional<double> gamma;
  std::optional<DenseMatrix> q_tilde;
  std::optional<DenseMatrix> r_tilde;
  std::optional<std::pair<Index, Index>> split;  // (m1, m2) for H-infinity
  std::optional<DenseMatrix> cross;              // S for the general family
};

// E x' = A x + B u, y = C x (+ D u)
struct SystemMatrices {
  SparseMatrix a;
  SparseMatrix e;
  DenseMatrix b;
  DenseMatrix c;
};

// Maps the control-theoretic equation families onto (Q, R, S):
//   lqg            Q = Q~, R = R~ + D^T D, S = C^T D
//   hinf           B = [B1 B2], R = blkdiag(-gamma^2 I, R~), S = 0
//   bounded_real   Q = I, R = -(gamma^2 I - D^T D), S = C^T D
//   positive_real  Q = 0, R = -(D^T + D), S = -C^T
// Weights default to identities.
CoefficientSet build_family(const FamilySpec& spec, const SystemMatrices& sys);

// Dense Riccati operator R(X), symmetrized.
DenseMatrix riccati_operator(const CoefficientSet& coeffs, const DenseMatrix& x);

// K = R^{-1} (B^T X E + S^T) for X = L D L^T, formed without X.
DenseMatrix feedback_from(const CoefficientSet& coeffs, const LdlFactor& x);

// R(X) in factored form: columns [A^T L, E^T L, C^T, K^T] with kernel
// blkdiag([[0, D], [D, 0]], Q, -R).
ResidualFactor riccati_residual(const CoefficientSet& coeffs, const LdlFactor& x);

struct CareMetrics {
  double res1 = 0.0;
  double res2 = 0.0;
  double res3 = 0.0;
};

// Norms that scale the residual metrics; independent of X.
struct MetricScales {
  double constant_norm = 0.0;  // ||C^T Q C - S R^{-1} S^T||_2
  double a_hat_norm = 0.0;     // ||A - B R^{-1} S^T||_2
  double e_norm = 0.0;         // ||E||_2
  double gain_norm = 0.0;      // ||B R^{-1} B^T||_2
};

MetricScales metric_scales(const CoefficientSet& coeffs);
CareMetrics metrics(const MetricScales& scales, double residual_norm, double x_norm);
CareMetrics metrics(const CoefficientSet& coeffs, const LdlFactor& x);
CareMetrics metrics(const CoefficientSet& coeffs, const DenseMatrix& x);

// ||X1 - X2||_2 / (0.5 (||X1||_2 + ||X2||_2)); 0 when both vanish.
double reldiff(const LdlFactor& x1, const LdlFactor& x2);
double reldiff(const DenseMatrix& x1, const DenseMatrix& x2);

// Solution X = Y2 (E Y1)^{-1} of a^T X e + e^T X a + qc - e^T X g X e = 0
// from the stable deflating subspace of
// ([[a, -g], [-qc, -a^T]], blkdiag(e, e^T)).
DenseMatrix stable_subspace_solution(const DenseMatrix& a, const DenseMatrix& e,
                                     const DenseMatrix& g, const DenseMatrix& qc);

// Stabilizing solution via the S-free form; verified to res1 <= 1e-10.
DenseMatrix dense_care_oracle(const CoefficientSet& coeffs);

}  // namespace riccati
