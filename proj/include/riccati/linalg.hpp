#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace riccati {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Problems of at most this dimension are handled with dense kernels.
inline constexpr Index kDenseThreshold = 500;

SparseMatrix sparse_identity(Index n);
SparseMatrix to_sparse(const DenseMatrix& mat);

// Checks the SparseMatrix invariants: compressed storage, finite values.
// Index ordering and deduplication are guaranteed by Eigen once compressed.
void check_finite(const SparseMatrix& mat, const char* what);
void check_finite(const DenseMatrix& mat, const char* what);

DenseMatrix block_diagonal(const std::vector<DenseMatrix>& blocks);

// Represents base + left * right^T without ever forming the sum when the
// dimension exceeds kDenseThreshold.
class LowRankUpdatedOperator {
 public:
  LowRankUpdatedOperator() = default;
  explicit LowRankUpdatedOperator(SparseMatrix base);
  LowRankUpdatedOperator(SparseMatrix base, DenseMatrix left,
                         DenseMatrix right);

  Index rows() const { return base_.rows(); }
  Index update_rank() const { return left_.cols(); }

  const SparseMatrix& base() const { return base_; }
  const DenseMatrix& left() const { return left_; }
  const DenseMatrix& right() const { return right_; }

  // (base + left right^T)^T = base^T + right left^T
  LowRankUpdatedOperator transposed() const;

  // Returns a copy with [left, extra_left][right, extra_right]^T appended.
  LowRankUpdatedOperator with_update(const DenseMatrix& extra_left,
                                     const DenseMatrix& extra_right) const;

  DenseMatrix apply(const DenseMatrix& x) const;
  ComplexMatrix apply(const ComplexMatrix& x) const;

  // Dense assembly. Throws PreconditionViolation above kDenseThreshold.
  DenseMatrix to_dense() const;

 private:
  SparseMatrix base_;
  DenseMatrix left_;
  DenseMatrix right_;
};

struct ShiftedSolverOptions {
  Index dense_threshold = kDenseThreshold;
  double ill_conditioned_above = 1e14;
  double backward_error_target = 1e-12;
};

// Factorization of (op + shift * massmat). Above the dense threshold the
// sparse part is factored with a sparse LU and the low-rank part of op is
// handled through the Sherman-Morrison-Woodbury identity.
class ShiftedSolver {
 public:
  ShiftedSolver(const LowRankUpdatedOperator& op, Complex shift,
                const SparseMatrix& massmat, ShiftedSolverOptions opts = {});
  ~ShiftedSolver();
  ShiftedSolver(ShiftedSolver&&) noexcept;
  ShiftedSolver& operator=(ShiftedSolver&&) noexcept;

  ComplexMatrix solve(const ComplexMatrix& rhs) const;
  // Only valid for real shifts.
  DenseMatrix solve(const DenseMatrix& rhs) const;

  Complex shift() const { return shift_; }
  bool uses_dense_path() const;
  double condition_estimate() const;
  bool ill_conditioned() const;

 private:
  struct RealKernel;
  struct ComplexKernel;
  Complex shift_;
  double ill_conditioned_above_;
  std::unique_ptr<RealKernel> real_;
  std::unique_ptr<ComplexKernel> complex_;
};

// One-shot convenience wrappers.
DenseMatrix solve_shifted(const LowRankUpdatedOperator& op, double shift,
                          const SparseMatrix& massmat, const DenseMatrix& rhs,
                          ShiftedSolverOptions opts = {});
ComplexMatrix solve_shifted(const LowRankUpdatedOperator& op, Complex shift,
                            const SparseMatrix& massmat,
                            const DenseMatrix& rhs,
                            ShiftedSolverOptions opts = {});

// Factorizations of a fixed operator, created lazily per distinct shift.
class ShiftedSolverCache {
 public:
  ShiftedSolverCache(const LowRankUpdatedOperator& op,
                     const SparseMatrix& massmat,
                     ShiftedSolverOptions opts = {});
  const ShiftedSolver& get(Complex shift);
  std::size_t size() const { return solvers_.size(); }

 private:
  struct ShiftLess {
    bool operator()(const Complex& a, const Complex& b) const {
      return a.real() < b.real() ||
             (a.real() == b.real() && a.imag() < b.imag());
    }
  };
  const LowRankUpdatedOperator& op_;
  const SparseMatrix& massmat_;
  ShiftedSolverOptions opts_;
  std::map<Complex, ShiftedSolver, ShiftLess> solvers_;
};

struct PencilEigenvalue {
  Complex value;
  bool infinite = false;
};

// Generalized eigenvalues of (pencil_a, pencil_e), i.e. the lambda with
// det(pencil_a - lambda pencil_e) = 0.
std::vector<PencilEigenvalue> small_eigs(const DenseMatrix& pencil_a,
                                         const DenseMatrix& pencil_e);
std::vector<Complex> finite_values(const std::vector<PencilEigenvalue>& eigs);
bool is_hurwitz(const std::vector<PencilEigenvalue>& eigs);

struct ThinQr {
  DenseMatrix orthonormal;
  DenseMatrix triangular;
};

// mat = orthonormal * triangular with a nonnegative diagonal in triangular.
ThinQr thin_qr(const DenseMatrix& mat);

// Largest singular value; dense SVD.
double dense_two_norm(const DenseMatrix& mat);
double symmetric_two_norm(const DenseMatrix& sym);

using LinearMap = std::function<DenseVector(const DenseVector&)>;

struct PowerIterationOptions {
  double tol = 1e-8;
  int max_iters = 500;
  std::uint64_t seed = 0x5eed;
};

// ||M||_2 via power iteration on M^T M, deterministic start vector.
double power_two_norm(Index cols, const LinearMap& apply,
                      const LinearMap& apply_transpose,
                      PowerIterationOptions opts = {});

// ||op||_2; dense SVD at or below kDenseThreshold, power iteration above.
double two_norm(const LowRankUpdatedOperator& op);
double two_norm(const SparseMatrix& mat);

}  // namespace riccati
