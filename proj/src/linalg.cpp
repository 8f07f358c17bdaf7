#include "riccati/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <lapacke.h>

#include "riccati/errors.hpp"
#include "riccati/log.hpp"

namespace riccati {

SparseMatrix sparse_identity(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix to_sparse(const DenseMatrix& mat) {
  SparseMatrix out = mat.sparseView();
  out.makeCompressed();
  return out;
}

void check_finite(const SparseMatrix& mat, const char* what) {
  if (!mat.isCompressed()) {
    throw PreconditionViolation(std::string(what) + " is not compressed");
  }
  for (Index k = 0; k < mat.nonZeros(); ++k) {
    if (!std::isfinite(mat.valuePtr()[k])) {
      throw PreconditionViolation(std::string(what) +
                                  " has a non-finite entry");
    }
  }
}

void check_finite(const DenseMatrix& mat, const char* what) {
  if (!mat.allFinite()) {
    throw PreconditionViolation(std::string(what) + " has a non-finite entry");
  }
}

DenseMatrix block_diagonal(const std::vector<DenseMatrix>& blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  DenseMatrix out = DenseMatrix::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

// ---------------------------------------------------------------------------
// LowRankUpdatedOperator

LowRankUpdatedOperator::LowRankUpdatedOperator(SparseMatrix base)
    : base_(std::move(base)),
      left_(base_.rows(), 0),
      right_(base_.rows(), 0) {
  if (base_.rows() != base_.cols()) throw NotSquare("operator base");
  base_.makeCompressed();
}

LowRankUpdatedOperator::LowRankUpdatedOperator(SparseMatrix base,
                                               DenseMatrix left,
                                               DenseMatrix right)
    : base_(std::move(base)), left_(std::move(left)), right_(std::move(right)) {
  if (base_.rows() != base_.cols()) throw NotSquare("operator base");
  if (left_.rows() != base_.rows() || right_.rows() != base_.rows() ||
      left_.cols() != right_.cols()) {
    throw DimensionMismatch("low-rank update factors do not match the base");
  }
  base_.makeCompressed();
}

LowRankUpdatedOperator LowRankUpdatedOperator::transposed() const {
  SparseMatrix bt = base_.transpose();
  return LowRankUpdatedOperator(std::move(bt), right_, left_);
}

LowRankUpdatedOperator LowRankUpdatedOperator::with_update(
    const DenseMatrix& extra_left, const DenseMatrix& extra_right) const {
  if (extra_left.cols() != extra_right.cols()) {
    throw DimensionMismatch("update factors have different widths");
  }
  DenseMatrix l(rows(), left_.cols() + extra_left.cols());
  DenseMatrix r(rows(), right_.cols() + extra_right.cols());
  l << left_, extra_left;
  r << right_, extra_right;
  return LowRankUpdatedOperator(base_, std::move(l), std::move(r));
}

DenseMatrix LowRankUpdatedOperator::apply(const DenseMatrix& x) const {
  DenseMatrix y = base_ * x;
  if (update_rank() > 0) y.noalias() += left_ * (right_.transpose() * x);
  return y;
}

ComplexMatrix LowRankUpdatedOperator::apply(const ComplexMatrix& x) const {
  return apply(DenseMatrix(x.real())).cast<Complex>() +
         Complex(0, 1) * apply(DenseMatrix(x.imag())).cast<Complex>();
}

DenseMatrix LowRankUpdatedOperator::to_dense() const {
  if (rows() > kDenseThreshold) {
    throw PreconditionViolation("refusing dense assembly of order " +
                                std::to_string(rows()));
  }
  DenseMatrix out = DenseMatrix(base_);
  if (update_rank() > 0) out.noalias() += left_ * right_.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// ShiftedSolver

namespace {

template <typename Scalar>
struct Kernel {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using SpMat = Eigen::SparseMatrix<Scalar>;

  bool dense = false;
  SpMat shifted;  // base + shift * massmat
  Mat left;
  Mat right;
  Eigen::PartialPivLU<Mat> dense_lu;
  // adjoint() is non-const in Eigen 3.4
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> sparse_lu;
  Mat minv_left;
  Eigen::PartialPivLU<Mat> capacitance;
  double cond = 0.0;
  double backward_target = 1e-12;

  Kernel(const LowRankUpdatedOperator& op, Scalar shift,
         const SparseMatrix& massmat, const ShiftedSolverOptions& opts) {
    const Index n = op.rows();
    if (massmat.rows() != n || massmat.cols() != n) {
      throw DimensionMismatch("mass matrix does not match the operator");
    }
    backward_target = opts.backward_error_target;
    shifted = op.base().template cast<Scalar>() +
              massmat.template cast<Scalar>() * shift;
    shifted.makeCompressed();
    left = op.left().template cast<Scalar>();
    right = op.right().template cast<Scalar>();
    dense = n <= opts.dense_threshold;
    const double eps = std::numeric_limits<double>::epsilon();
    if (dense) {
      Mat full = Mat(shifted);
      if (left.cols() > 0) full.noalias() += left * right.transpose();
      dense_lu.compute(full);
      const double rcond = n == 0 ? 1.0 : dense_lu.rcond();
      if (!(rcond > eps)) {
        throw SingularOperator("shifted operator is numerically singular");
      }
      cond = 1.0 / rcond;
    } else {
      sparse_lu.analyzePattern(shifted);
      sparse_lu.factorize(shifted);
      if (sparse_lu.info() != Eigen::Success) {
        throw SingularOperator("sparse LU of the shifted operator failed: " +
                               sparse_lu.lastErrorMessage());
      }
      cond = estimate_condition();
      if (!(cond < 1.0 / eps)) {
        throw SingularOperator("shifted operator is numerically singular");
      }
      if (left.cols() > 0) {
        minv_left = sparse_lu.solve(left);
        Mat cap = Mat::Identity(left.cols(), left.cols()) +
                  right.transpose() * minv_left;
        capacitance.compute(cap);
        if (!(capacitance.rcond() > eps)) {
          throw SingularOperator("Woodbury capacitance matrix is singular");
        }
      }
    }
    if (cond > opts.ill_conditioned_above) {
      log().warn("IllConditioned: shifted operator condition estimate {:.3e}",
                 cond);
    }
  }

  // Hager's 1-norm estimate of ||M^{-1}||_1 times ||M||_1 for the sparse part.
  double estimate_condition() const {
    const Index n = shifted.rows();
    if (n == 0) return 1.0;
    double norm_m = 0.0;
    for (Index j = 0; j < shifted.outerSize(); ++j) {
      double s = 0.0;
      for (typename SpMat::InnerIterator it(shifted, j); it; ++it) {
        s += std::abs(it.value());
      }
      norm_m = std::max(norm_m, s);
    }
    Vec x = Vec::Constant(n, Scalar(1.0 / static_cast<double>(n)));
    double est = 0.0;
    Index last = -1;
    for (int iter = 0; iter < 5; ++iter) {
      Vec y = sparse_lu.solve(x);
      est = y.template lpNorm<1>();
      Vec xi(n);
      for (Index i = 0; i < n; ++i) {
        const double a = std::abs(y(i));
        xi(i) = a == 0.0 ? Scalar(1) : y(i) / a;
      }
      Vec z = sparse_lu.adjoint().solve(xi);
      Index j = 0;
      const double zmax = z.cwiseAbs().maxCoeff(&j);
      if (zmax <= std::real(z.dot(x)) || j == last) break;
      x.setZero();
      x(j) = Scalar(1);
      last = j;
    }
    return est * norm_m;
  }

  Mat raw_solve(const Mat& rhs) const {
    if (dense) return dense_lu.solve(rhs);
    Mat y = sparse_lu.solve(rhs);
    if (left.cols() > 0) {
      y -= minv_left * capacitance.solve(right.transpose() * y);
    }
    return y;
  }

  Mat apply(const Mat& x) const {
    Mat y = shifted * x;
    if (left.cols() > 0) y.noalias() += left * (right.transpose() * x);
    return y;
  }

  Mat solve(const Mat& rhs) const {
    Mat x = raw_solve(rhs);
    if (dense) return x;
    // A couple of refinement sweeps when the Woodbury route loses accuracy.
    for (int sweep = 0; sweep < 2; ++sweep) {
      Mat r = rhs - apply(x);
      const double scale = rhs.norm() + 1e-300;
      if (r.norm() <= backward_target * scale) break;
      x += raw_solve(r);
    }
    return x;
  }
};

}  // namespace

struct ShiftedSolver::RealKernel : Kernel<double> {
  using Kernel<double>::Kernel;
};
struct ShiftedSolver::ComplexKernel : Kernel<Complex> {
  using Kernel<Complex>::Kernel;
};

ShiftedSolver::ShiftedSolver(const LowRankUpdatedOperator& op, Complex shift,
                             const SparseMatrix& massmat,
                             ShiftedSolverOptions opts)
    : shift_(shift), ill_conditioned_above_(opts.ill_conditioned_above) {
  if (shift.imag() == 0.0) {
    real_ = std::make_unique<RealKernel>(op, shift.real(), massmat, opts);
  } else {
    complex_ = std::make_unique<ComplexKernel>(op, shift, massmat, opts);
  }
}

ShiftedSolver::~ShiftedSolver() = default;
ShiftedSolver::ShiftedSolver(ShiftedSolver&&) noexcept = default;
ShiftedSolver& ShiftedSolver::operator=(ShiftedSolver&&) noexcept = default;

ComplexMatrix ShiftedSolver::solve(const ComplexMatrix& rhs) const {
  if (real_) {
    return real_->solve(rhs.real()).cast<Complex>() +
           Complex(0, 1) * real_->solve(rhs.imag()).cast<Complex>();
  }
  return complex_->solve(rhs);
}

DenseMatrix ShiftedSolver::solve(const DenseMatrix& rhs) const {
  if (!real_) {
    throw PreconditionViolation("real solve requested for a complex shift");
  }
  return real_->solve(rhs);
}

bool ShiftedSolver::uses_dense_path() const {
  return real_ ? real_->dense : complex_->dense;
}

double ShiftedSolver::condition_estimate() const {
  return real_ ? real_->cond : complex_->cond;
}

bool ShiftedSolver::ill_conditioned() const {
  return condition_estimate() > ill_conditioned_above_;
}

DenseMatrix solve_shifted(const LowRankUpdatedOperator& op, double shift,
                          const SparseMatrix& massmat, const DenseMatrix& rhs,
                          ShiftedSolverOptions opts) {
  return ShiftedSolver(op, shift, massmat, opts).solve(rhs);
}

ComplexMatrix solve_shifted(const LowRankUpdatedOperator& op, Complex shift,
                            const SparseMatrix& massmat,
                            const DenseMatrix& rhs,
                            ShiftedSolverOptions opts) {
  return ShiftedSolver(op, shift, massmat, opts)
      .solve(ComplexMatrix(rhs.cast<Complex>()));
}

ShiftedSolverCache::ShiftedSolverCache(const LowRankUpdatedOperator& op,
                                       const SparseMatrix& massmat,
                                       ShiftedSolverOptions opts)
    : op_(op), massmat_(massmat), opts_(opts) {}

const ShiftedSolver& ShiftedSolverCache::get(Complex shift) {
  auto it = solvers_.find(shift);
  if (it == solvers_.end()) {
    it = solvers_.emplace(shift, ShiftedSolver(op_, shift, massmat_, opts_))
             .first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Eigenvalues, QR, norms

std::vector<PencilEigenvalue> small_eigs(const DenseMatrix& pencil_a,
                                         const DenseMatrix& pencil_e) {
  const Index n = pencil_a.rows();
  if (pencil_a.cols() != n) throw NotSquare("pencil matrix");
  if (pencil_e.rows() != n || pencil_e.cols() != n) {
    throw DimensionMismatch("pencil matrices differ in size");
  }
  if (n > 5000) {
    throw PreconditionViolation("small_eigs is limited to order 5000");
  }
  std::vector<PencilEigenvalue> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 0) return out;
  DenseMatrix a = pencil_a;
  DenseVector wr(n), wi(n);
  const lapack_int ln = lapack_int(n);
  if (pencil_e.isIdentity(0.0)) {
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', ln, a.data(), ln, wr.data(),
                                          wi.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw SingularPencil("eigenvalue iteration did not converge");
    for (Index i = 0; i < n; ++i) out.push_back({Complex(wr(i), wi(i)), false});
    return out;
  }
  DenseMatrix e = pencil_e;
  DenseVector beta(n);
  const lapack_int info =
      LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', 'N', ln, a.data(), ln, e.data(), ln, wr.data(),
                    wi.data(), beta.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw SingularPencil("generalized eigenvalue iteration did not converge");
  const double eps = std::numeric_limits<double>::epsilon();
  for (Index i = 0; i < n; ++i) {
    const Complex alpha(wr(i), wi(i));
    if (std::abs(beta(i)) <= 100.0 * eps * std::abs(alpha)) {
      out.push_back({Complex(std::numeric_limits<double>::infinity(), 0.0), true});
    } else {
      out.push_back({alpha / beta(i), false});
    }
  }
  return out;
}

std::vector<Complex> finite_values(const std::vector<PencilEigenvalue>& eigs) {
  std::vector<Complex> out;
  for (const auto& e : eigs) {
    if (!e.infinite) out.push_back(e.value);
  }
  return out;
}

bool is_hurwitz(const std::vector<PencilEigenvalue>& eigs) {
  return std::all_of(eigs.begin(), eigs.end(), [](const PencilEigenvalue& e) {
    return !e.infinite && e.value.real() < 0.0;
  });
}

ThinQr thin_qr(const DenseMatrix& mat) {
  const Index m = mat.rows();
  const Index k = std::min(mat.rows(), mat.cols());
  Eigen::HouseholderQR<DenseMatrix> qr(mat);
  ThinQr out;
  out.orthonormal = qr.householderQ() * DenseMatrix::Identity(m, k);
  out.triangular = qr.matrixQR()
                       .topRows(k)
                       .template triangularView<Eigen::Upper>();
  for (Index i = 0; i < k; ++i) {
    if (out.triangular(i, i) < 0.0) {
      out.triangular.row(i) *= -1.0;
      out.orthonormal.col(i) *= -1.0;
    }
  }
  return out;
}

double dense_two_norm(const DenseMatrix& mat) {
  if (mat.size() == 0) return 0.0;
  Eigen::BDCSVD<DenseMatrix> svd(mat);
  return svd.singularValues()(0);
}

double symmetric_two_norm(const DenseMatrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(
      0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double power_two_norm(Index cols, const LinearMap& apply,
                      const LinearMap& apply_transpose,
                      PowerIterationOptions opts) {
  if (cols == 0) return 0.0;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> dist;
  DenseVector x(cols);
  for (Index i = 0; i < cols; ++i) x(i) = dist(rng);
  x.normalize();
  double sigma = 0.0;
  for (int it = 0; it < opts.max_iters; ++it) {
    DenseVector y = apply(x);
    DenseVector z = apply_transpose(y);
    const double lambda = z.norm();
    if (lambda == 0.0) return 0.0;
    const double next = std::sqrt(lambda);
    x = z / lambda;
    if (std::abs(next - sigma) <= opts.tol * next) return next;
    sigma = next;
  }
  return sigma;
}

double two_norm(const LowRankUpdatedOperator& op) {
  if (op.rows() <= kDenseThreshold) return dense_two_norm(op.to_dense());
  const LowRankUpdatedOperator t = op.transposed();
  return power_two_norm(
      op.rows(), [&](const DenseVector& v) { return DenseVector(op.apply(DenseMatrix(v))); },
      [&](const DenseVector& v) { return DenseVector(t.apply(DenseMatrix(v))); });
}

double two_norm(const SparseMatrix& mat) {
  if (mat.rows() <= kDenseThreshold && mat.cols() <= kDenseThreshold) {
    return dense_two_norm(DenseMatrix(mat));
  }
  return power_two_norm(
      mat.cols(), [&](const DenseVector& v) { return DenseVector(mat * v); },
      [&](const DenseVector& v) {
        return DenseVector(mat.transpose() * v);
      });
}

}  // namespace riccati
