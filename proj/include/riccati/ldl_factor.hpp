#pragma once

#include <filesystem>
#include <vector>

#include "riccati/linalg.hpp"

namespace riccati {

// outer * inner * outer^T with a symmetric inner matrix. The inner matrix
// is symmetrized on construction.
class SymmetricLowRank {
 public:
  SymmetricLowRank() = default;
  SymmetricLowRank(DenseMatrix outer, DenseMatrix inner);

  Index rows() const { return outer_.rows(); }
  Index width() const { return outer_.cols(); }
  const DenseMatrix& outer() const { return outer_; }
  const DenseMatrix& inner() const { return inner_; }
  DenseMatrix to_dense() const;

 protected:
  DenseMatrix outer_;
  DenseMatrix inner_;
};

// X ~ L D L^T
class LdlFactor : public SymmetricLowRank {
 public:
  LdlFactor() = default;
  LdlFactor(DenseMatrix left, DenseMatrix center)
      : SymmetricLowRank(std::move(left), std::move(center)) {}
  static LdlFactor zero(Index n);

  const DenseMatrix& left() const { return outer_; }
  const DenseMatrix& center() const { return inner_; }
  Index rank() const { return width(); }
};

// A symmetric residual columns * kernel * columns^T.
class ResidualFactor : public SymmetricLowRank {
 public:
  ResidualFactor() = default;
  ResidualFactor(DenseMatrix columns, DenseMatrix kernel)
      : SymmetricLowRank(std::move(columns), std::move(kernel)) {}
  explicit ResidualFactor(const LdlFactor& f)
      : SymmetricLowRank(f.left(), f.center()) {}

  const DenseMatrix& columns() const { return outer_; }
  const DenseMatrix& kernel() const { return inner_; }
};

// machine epsilon times n
double default_compression_tolerance(Index n);

LdlFactor compress(const LdlFactor& factor, double rel_tol);
LdlFactor compress(const LdlFactor& factor);

// Eigendecomposition of a dense symmetric matrix, dropping eigenvalues below
// rel_tol times the largest magnitude.
LdlFactor factor_dense(const DenseMatrix& sym, double rel_tol);

double sym_two_norm(const SymmetricLowRank& f);
double sym_frobenius_norm(const SymmetricLowRank& f);
double sym_two_norm(const DenseMatrix& outer, const DenseMatrix& inner);
double sym_frobenius_norm(const DenseMatrix& outer, const DenseMatrix& inner);

LdlFactor concat(const std::vector<LdlFactor>& factors,
                 const std::vector<double>& weights);
ResidualFactor concat(const std::vector<ResidualFactor>& factors,
                      const std::vector<double>& weights);

// Writes <stem>.L.mtx, <stem>.D.mtx and <stem>.json (n, rank, tolerance).
void save_factor(const std::filesystem::path& stem, const LdlFactor& factor,
                 double tolerance);
LdlFactor load_factor(const std::filesystem::path& stem);

}  // namespace riccati
