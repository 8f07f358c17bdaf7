#pragma once

#include <optional>

#include "riccati/ldl_factor.hpp"
#include "riccati/linalg.hpp"

namespace riccati {

// A^T X E + E^T X A + C^T Q C - (B^T X E + S^T)^T R^{-1} (B^T X E + S^T) = 0
struct CoefficientSet {
  SparseMatrix a;
  SparseMatrix e;
  DenseMatrix b;  // n x m
  DenseMatrix c;  // p x n
  DenseMatrix q;  // p x p
  DenseMatrix r;  // m x m, invertible
  DenseMatrix s;  // n x m
  // When S = C^T D for a known p x m matrix D, the constant term of the
  // S-free form collapses to C^T (Q - D R^{-1} D^T) C.
  std::optional<DenseMatrix> feedthrough;

  Index n() const { return a.rows(); }
  Index m() const { return b.cols(); }
  Index p() const { return c.rows(); }
  bool has_cross_term() const { return s.size() > 0 && s.cwiseAbs().maxCoeff() > 0.0; }

  // Dimension, symmetry and finiteness checks; throws on violation.
  void validate() const;

  // R^{-1} rhs; throws RSolveFailure when R is numerically singular.
  DenseMatrix r_solve(const DenseMatrix& rhs) const;
};

// Builds a CoefficientSet from dense data; S defaults to zero and E to I.
CoefficientSet make_coefficients(const DenseMatrix& a, const DenseMatrix& e,
                                 const DenseMatrix& b, const DenseMatrix& c,
                                 const DenseMatrix& q, const DenseMatrix& r,
                                 const DenseMatrix& s);

// The same equation with the cross term hidden in the other matrices:
// A_hat^T X E + E^T X A_hat + C_hat^T Q_hat C_hat - E^T X B R^{-1} B^T X E = 0
// with A_hat = A + U V^T, U = -B, V = S R^{-T}, C_hat = [C; S^T],
// Q_hat = blkdiag(Q, -R^{-1}).
struct ReformulatedSet {
  LowRankUpdatedOperator a_hat;
  SparseMatrix e;
  DenseMatrix b;
  DenseMatrix r;
  DenseMatrix u;
  DenseMatrix v;
  DenseMatrix c_hat;
  DenseMatrix q_hat;
  // Q - D R^{-1} D^T when S = C^T D is known; the constant term is then
  // C^T reduced_q C with only p columns.
  std::optional<DenseMatrix> reduced_q;
  DenseMatrix c;

  Index n() const { return a_hat.rows(); }
  Index m() const { return b.cols(); }
  // Feedback offset: the feedback of the original equation is K_hat + V^T.
  DenseMatrix feedback_offset() const { return v.transpose(); }
  // Constant term as (columns, kernel), using reduced_q when available.
  ResidualFactor constant_term() const;
};

ReformulatedSet reformulate(const CoefficientSet& coeffs);

// Constant term of the Lyapunov equation in a Newton step with feedback K:
// columns [C^T, S R^{-1}, K^T - S R^{-1}] and kernel blkdiag(Q, -R, R).
// The middle block is omitted when S = 0.
ResidualFactor build_constant_factor(const CoefficientSet& coeffs,
                                     const DenseMatrix& feedback);

// C^T Q C - S R^{-1} S^T in factored form.
ResidualFactor constant_term(const CoefficientSet& coeffs);

}  // namespace riccati
