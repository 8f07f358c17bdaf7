#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/random.hpp"
#include "riccati/errors.hpp"
#include "riccati/linalg.hpp"

using namespace riccati;
using riccati::testing::random_matrix;
using riccati::testing::random_sparse_stable;

namespace {

// Smallest singular value of (A - lambda E); zero exactly at eigenvalues.
double pencil_sigma_min(const DenseMatrix& a, const DenseMatrix& e,
                        Complex lambda) {
  ComplexMatrix m = a.cast<Complex>() - lambda * e.cast<Complex>();
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

TEST_CASE("low-rank operator applies base plus update") {
  std::mt19937_64 rng(1);
  SparseMatrix base = random_sparse_stable(12, 0.2, rng);
  DenseMatrix l = random_matrix(12, 3, rng);
  DenseMatrix r = random_matrix(12, 3, rng);
  LowRankUpdatedOperator op(base, l, r);
  DenseMatrix x = random_matrix(12, 2, rng);
  DenseMatrix expected = DenseMatrix(base) * x + l * (r.transpose() * x);
  CHECK((op.apply(x) - expected).norm() < 1e-12 * expected.norm());
  DenseMatrix dense_t = op.transposed().to_dense();
  CHECK((dense_t - op.to_dense().transpose()).norm() < 1e-13);
}

TEST_CASE("dense assembly is refused above the dense threshold") {
  LowRankUpdatedOperator op(sparse_identity(kDenseThreshold + 1));
  CHECK_THROWS_AS(op.to_dense(), PreconditionViolation);
}

TEST_CASE("Woodbury shifted solve matches a dense full-pivot solve") {
  std::mt19937_64 rng(2);
  const Index n = 40;
  SparseMatrix base = random_sparse_stable(n, 0.1, rng);
  SparseMatrix mass = sparse_identity(n);
  mass.coeffRef(3, 3) = 2.0;
  LowRankUpdatedOperator op(base, random_matrix(n, 4, rng),
                            random_matrix(n, 4, rng));
  DenseMatrix rhs = random_matrix(n, 3, rng);
  ShiftedSolverOptions woodbury;
  woodbury.dense_threshold = 0;

  for (double shift : {-0.5, -1.7, -10.0}) {
    DenseMatrix full = op.to_dense() + shift * DenseMatrix(mass);
    DenseMatrix oracle = full.fullPivLu().solve(rhs);
    DenseMatrix x = solve_shifted(op, shift, mass, rhs, woodbury);
    CHECK((x - oracle).norm() <= 1e-10 * oracle.norm());
    DenseMatrix y = solve_shifted(op, shift, mass, rhs);
    CHECK((y - oracle).norm() <= 1e-10 * oracle.norm());
  }

  const Complex shift(-1.0, 2.5);
  ComplexMatrix full =
      op.to_dense().cast<Complex>() + shift * DenseMatrix(mass).cast<Complex>();
  ComplexMatrix oracle = full.fullPivLu().solve(rhs.cast<Complex>());
  ComplexMatrix x = solve_shifted(op, shift, mass, rhs, woodbury);
  CHECK((x - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("shifted solver reports singular operators") {
  SparseMatrix base = sparse_identity(5);
  // base - 1 * I is the zero matrix
  LowRankUpdatedOperator op(base);
  CHECK_THROWS_AS(ShiftedSolver(op, Complex(-1.0, 0.0), sparse_identity(5)),
                  SingularOperator);
  ShiftedSolverOptions woodbury;
  woodbury.dense_threshold = 0;
  CHECK_THROWS_AS(
      ShiftedSolver(op, Complex(-1.0, 0.0), sparse_identity(5), woodbury),
      SingularOperator);
}

TEST_CASE("shifted solver condition estimate is within a small factor") {
  std::mt19937_64 rng(3);
  const Index n = 30;
  SparseMatrix base = random_sparse_stable(n, 0.15, rng);
  LowRankUpdatedOperator op(base);
  ShiftedSolverOptions woodbury;
  woodbury.dense_threshold = 0;
  ShiftedSolver solver(op, Complex(-0.3, 0.0), sparse_identity(n), woodbury);
  DenseMatrix m = DenseMatrix(base) - 0.3 * DenseMatrix::Identity(n, n);
  const double exact = m.cwiseAbs().colwise().sum().maxCoeff() *
                       m.inverse().cwiseAbs().colwise().sum().maxCoeff();
  CHECK(solver.condition_estimate() <= exact * (1 + 1e-10));
  CHECK(solver.condition_estimate() >= exact / 10.0);
  CHECK_FALSE(solver.ill_conditioned());
}

TEST_CASE("solver cache factors each shift once") {
  std::mt19937_64 rng(4);
  SparseMatrix base = random_sparse_stable(10, 0.2, rng);
  LowRankUpdatedOperator op(base);
  SparseMatrix mass = sparse_identity(10);
  ShiftedSolverCache cache(op, mass);
  cache.get(Complex(-1.0, 0.0));
  cache.get(Complex(-1.0, 1.0));
  cache.get(Complex(-1.0, 0.0));
  CHECK(cache.size() == 2);
}

TEST_CASE("small_eigs on a known 2x2 matrix") {
  DenseMatrix a(2, 2);
  a << 2, 1, 1, -3;
  auto eigs = finite_values(small_eigs(a, DenseMatrix::Identity(2, 2)));
  REQUIRE(eigs.size() == 2);
  std::sort(eigs.begin(), eigs.end(),
            [](Complex x, Complex y) { return x.real() < y.real(); });
  CHECK(eigs[0].real() == doctest::Approx((-1.0 - std::sqrt(29.0)) / 2));
  CHECK(eigs[1].real() == doctest::Approx((-1.0 + std::sqrt(29.0)) / 2));
}

TEST_CASE("small_eigs satisfy the pencil equation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 3 + trial;
    DenseMatrix a = random_matrix(n, n, rng);
    DenseMatrix e = random_matrix(n, n, rng) + 3.0 * DenseMatrix::Identity(n, n);
    auto eigs = small_eigs(a, e);
    REQUIRE(eigs.size() == static_cast<std::size_t>(n));
    Complex sum = 0.0;
    for (const auto& ev : eigs) {
      REQUIRE_FALSE(ev.infinite);
      const double scale = a.norm() + std::abs(ev.value) * e.norm();
      CHECK(pencil_sigma_min(a, e, ev.value) <= 1e-10 * scale);
      sum += ev.value;
    }
    const double trace = (e.inverse() * a).trace();
    CHECK(std::abs(sum - trace) <= 1e-9 * (1 + std::abs(trace)));
  }
}

TEST_CASE("small_eigs flags infinite eigenvalues of a singular E") {
  DenseMatrix a = DenseMatrix::Identity(3, 3);
  a(0, 1) = 2.0;
  DenseMatrix e = DenseMatrix::Zero(3, 3);
  e(0, 0) = 1.0;
  e(1, 1) = 1.0;
  auto eigs = small_eigs(a, e);
  int infinite = 0;
  for (const auto& ev : eigs) infinite += ev.infinite ? 1 : 0;
  CHECK(infinite == 1);
  CHECK_FALSE(is_hurwitz(eigs));
}

TEST_CASE("thin_qr reconstructs with orthonormal columns") {
  std::mt19937_64 rng(6);
  for (auto [rows, cols] : {std::pair<Index, Index>{20, 5}, {6, 9}, {8, 8}}) {
    DenseMatrix m = random_matrix(rows, cols, rng);
    ThinQr qr = thin_qr(m);
    const Index k = std::min(rows, cols);
    CHECK(qr.orthonormal.cols() == k);
    CHECK((qr.orthonormal * qr.triangular - m).norm() < 1e-12 * m.norm());
    CHECK((qr.orthonormal.transpose() * qr.orthonormal -
           DenseMatrix::Identity(k, k))
              .norm() < 1e-12);
    for (Index i = 0; i < k; ++i) CHECK(qr.triangular(i, i) >= 0.0);
  }
}

TEST_CASE("power iteration agrees with the SVD") {
  std::mt19937_64 rng(7);
  DenseMatrix m = random_matrix(30, 20, rng);
  const double sigma = dense_two_norm(m);
  const double est = power_two_norm(
      20, [&](const DenseVector& v) { return DenseVector(m * v); },
      [&](const DenseVector& v) { return DenseVector(m.transpose() * v); },
      {1e-12, 5000, 11});
  CHECK(est == doctest::Approx(sigma).epsilon(1e-6));
  DenseMatrix s = riccati::testing::random_symmetric(15, rng);
  CHECK(symmetric_two_norm(s) == doctest::Approx(dense_two_norm(s)));
}
