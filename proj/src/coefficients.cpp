#include "riccati/coefficients.hpp"

#include <cmath>
#include <limits>

#include "riccati/errors.hpp"

namespace riccati {

namespace {

void require_symmetric(const DenseMatrix& mat, const char* what) {
  if (mat.rows() != mat.cols()) throw NotSquare(what);
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  if ((mat - mat.transpose()).cwiseAbs().maxCoeff() > 1e-13 * scale) {
    throw PreconditionViolation(std::string(what) + " is not symmetric");
  }
}

}  // namespace

void CoefficientSet::validate() const {
  const Index n_ = n();
  if (a.rows() != a.cols()) throw NotSquare("A");
  if (e.rows() != n_ || e.cols() != n_) throw DimensionMismatch("E must be n x n");
  if (b.rows() != n_) throw DimensionMismatch("B must have n rows");
  if (c.cols() != n_) throw DimensionMismatch("C must have n columns");
  if (q.rows() != p() || q.cols() != p()) throw DimensionMismatch("Q must be p x p");
  if (r.rows() != m() || r.cols() != m()) throw DimensionMismatch("R must be m x m");
  if (s.rows() != n_ || s.cols() != m()) throw DimensionMismatch("S must be n x m");
  require_symmetric(q, "Q");
  require_symmetric(r, "R");
  check_finite(a, "A");
  check_finite(e, "E");
  check_finite(b, "B");
  check_finite(c, "C");
  check_finite(q, "Q");
  check_finite(r, "R");
  check_finite(s, "S");
  if (feedthrough) {
    if (feedthrough->rows() != p() || feedthrough->cols() != m()) {
      throw DimensionMismatch("feedthrough must be p x m");
    }
    const DenseMatrix implied = c.transpose() * *feedthrough;
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((implied - s).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw PreconditionViolation("S does not equal C^T D for the recorded D");
    }
  }
  r_solve(DenseMatrix::Identity(m(), m()));
}

DenseMatrix CoefficientSet::r_solve(const DenseMatrix& rhs) const {
  Eigen::PartialPivLU<DenseMatrix> lu(r);
  const double rcond = r.size() == 0 ? 1.0 : lu.rcond();
  if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
    throw RSolveFailure("R is numerically singular (rcond " +
                        std::to_string(rcond) + ")");
  }
  DenseMatrix x = lu.solve(rhs);
  if (!x.allFinite()) throw RSolveFailure("R solve produced non-finite values");
  return x;
}

CoefficientSet make_coefficients(const DenseMatrix& a, const DenseMatrix& e,
                                 const DenseMatrix& b, const DenseMatrix& c,
                                 const DenseMatrix& q, const DenseMatrix& r,
                                 const DenseMatrix& s) {
  CoefficientSet out;
  out.a = to_sparse(a);
  out.e = e.size() == 0 ? sparse_identity(a.rows()) : to_sparse(e);
  out.b = b;
  out.c = c;
  out.q = q;
  out.r = r;
  out.s = s.size() == 0 ? DenseMatrix::Zero(a.rows(), b.cols()) : s;
  out.validate();
  return out;
}

ResidualFactor ReformulatedSet::constant_term() const {
  if (reduced_q) return ResidualFactor(c.transpose(), *reduced_q);
  return ResidualFactor(c_hat.transpose(), q_hat);
}

ReformulatedSet reformulate(const CoefficientSet& coeffs) {
  coeffs.validate();
  const Index m = coeffs.m();
  ReformulatedSet out;
  const DenseMatrix r_inv = coeffs.r_solve(DenseMatrix::Identity(m, m));
  out.u = -coeffs.b;
  out.v = coeffs.s * r_inv.transpose();
  out.a_hat = LowRankUpdatedOperator(coeffs.a, out.u, out.v);
  out.e = coeffs.e;
  out.b = coeffs.b;
  out.r = coeffs.r;
  out.c = coeffs.c;
  out.c_hat.resize(coeffs.p() + m, coeffs.n());
  out.c_hat << coeffs.c, coeffs.s.transpose();
  out.q_hat = block_diagonal({coeffs.q, DenseMatrix(-r_inv)});
  if (coeffs.feedthrough) {
    const DenseMatrix& d = *coeffs.feedthrough;
    out.reduced_q = coeffs.q - d * coeffs.r_solve(d.transpose());
    *out.reduced_q = 0.5 * (*out.reduced_q + out.reduced_q->transpose());
  }
  return out;
}

ResidualFactor build_constant_factor(const CoefficientSet& coeffs,
                                     const DenseMatrix& feedback) {
  const Index n = coeffs.n();
  const Index m = coeffs.m();
  if (feedback.rows() != m || feedback.cols() != n) {
    throw DimensionMismatch("feedback must be m x n");
  }
  if (!coeffs.has_cross_term()) {
    DenseMatrix cols(n, coeffs.p() + m);
    cols << coeffs.c.transpose(), feedback.transpose();
    return ResidualFactor(std::move(cols), block_diagonal({coeffs.q, coeffs.r}));
  }
  // (R^{-1} S^T)^T
  const DenseMatrix rs = coeffs.r_solve(coeffs.s.transpose()).transpose();
  DenseMatrix cols(n, coeffs.p() + 2 * m);
  cols << coeffs.c.transpose(), rs, feedback.transpose() - rs;
  return ResidualFactor(std::move(cols),
                        block_diagonal({coeffs.q, DenseMatrix(-coeffs.r), coeffs.r}));
}

ResidualFactor constant_term(const CoefficientSet& coeffs) {
  const Index m = coeffs.m();
  DenseMatrix cols(coeffs.n(), coeffs.p() + m);
  cols << coeffs.c.transpose(), coeffs.s;
  const DenseMatrix r_inv = coeffs.r_solve(DenseMatrix::Identity(m, m));
  return ResidualFactor(std::move(cols), block_diagonal({coeffs.q, DenseMatrix(-r_inv)}));
}

}  // namespace riccati
