#include "riccati/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <lapacke.h>

#include "riccati/errors.hpp"
#include "riccati/log.hpp"

namespace riccati {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void validate(const LyapunovProblem& problem) {
  const Index n = problem.op.rows();
  if (problem.massmat.rows() != n || problem.massmat.cols() != n) {
    throw DimensionMismatch("mass matrix does not match the operator");
  }
  if (problem.rhs.rows() != n) {
    throw DimensionMismatch("right-hand side factor does not match the operator");
  }
}

// Treat values with a negligible imaginary part as real.
Complex clean(Complex z) {
  if (std::abs(z.imag()) <= 1e-10 * std::abs(z)) return {z.real(), 0.0};
  return z;
}

std::vector<Complex> stable_only(const std::vector<Complex>& values) {
  std::vector<Complex> out;
  for (Complex z : values) {
    if (std::isfinite(z.real()) && std::isfinite(z.imag()) && z.real() < 0.0) {
      out.push_back(clean(z));
    }
  }
  return out;
}

// Ritz values of (U^T AA U, U^T EE U) on the span of basis.
std::vector<Complex> projected_ritz(const LowRankUpdatedOperator& aa,
                                    const SparseMatrix& ee,
                                    const DenseMatrix& basis) {
  if (basis.cols() == 0) return {};
  ThinQr qr = thin_qr(basis);
  // Drop directions that are numerically absent.
  const double top = qr.triangular.diagonal().cwiseAbs().maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < qr.triangular.rows(); ++i) {
    if (std::abs(qr.triangular(i, i)) > 1e-12 * top) keep.push_back(i);
  }
  if (keep.empty()) return {};
  DenseMatrix u(basis.rows(), static_cast<Index>(keep.size()));
  for (Index c = 0; c < u.cols(); ++c) u.col(c) = qr.orthonormal.col(keep[c]);
  DenseMatrix pa = u.transpose() * aa.apply(u);
  DenseMatrix pe = u.transpose() * (ee * u);
  return finite_values(small_eigs(pa, pe));
}

// Ritz values from k Arnoldi steps on a linear map.
std::vector<Complex> arnoldi_ritz(const LinearMap& apply, DenseVector start,
                                  Index k) {
  const Index n = start.size();
  k = std::min(k, n);
  if (k == 0 || start.norm() == 0.0) return {};
  DenseMatrix v = DenseMatrix::Zero(n, k + 1);
  DenseMatrix h = DenseMatrix::Zero(k + 1, k);
  v.col(0) = start.normalized();
  Index steps = k;
  for (Index j = 0; j < k; ++j) {
    DenseVector w = apply(v.col(j));
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i <= j; ++i) {
        const double c = v.col(i).dot(w);
        h(i, j) += c;
        w -= c * v.col(i);
      }
    }
    h(j + 1, j) = w.norm();
    if (h(j + 1, j) <= 1e-14 * h.col(j).norm()) {
      steps = j + 1;
      break;
    }
    v.col(j + 1) = w / h(j + 1, j);
  }
  return finite_values(small_eigs(h.topLeftCorner(steps, steps),
                                  DenseMatrix::Identity(steps, steps)));
}

std::vector<Complex> penzl_candidates(const LyapunovProblem& problem,
                                      const AdiOptions& opts) {
  const Index n = problem.op.rows();
  const LowRankUpdatedOperator aa = problem.op.transposed();
  const SparseMatrix ee = problem.massmat.transpose();
  DenseVector start = problem.rhs.columns().rowwise().sum();
  if (start.norm() == 0.0) start = DenseVector::Ones(n);
  const Index k = std::max<Index>(2 * opts.shift_count, 10);

  ShiftedSolverOptions solver_opts = opts.solver;
  const LowRankUpdatedOperator e_op(ee);
  const SparseMatrix zero_mass(n, n);
  ShiftedSolver e_solver(e_op, 0.0, zero_mass, solver_opts);
  std::vector<Complex> out = arnoldi_ritz(
      [&](const DenseVector& x) {
        return DenseVector(e_solver.solve(DenseMatrix(aa.apply(DenseMatrix(x)))));
      },
      start, k);
  try {
    ShiftedSolver a_solver(aa, 0.0, zero_mass, solver_opts);
    for (Complex z : arnoldi_ritz(
             [&](const DenseVector& x) {
               return DenseVector(a_solver.solve(DenseMatrix(ee * x)));
             },
             start, k)) {
      if (std::abs(z) > 0.0) out.push_back(1.0 / z);
    }
  } catch (const SingularOperator&) {
    log().debug("shift heuristic: operator singular, skipping inverse Ritz values");
  }
  return stable_only(out);
}

double rational_magnitude(const std::vector<Complex>& poles, Complex x) {
  double value = 1.0;
  for (Complex p : poles) value *= std::abs((x - p) / (x + p));
  return value;
}

bool is_real(Complex z) { return z.imag() == 0.0; }

}  // namespace

std::vector<Complex> select_shifts(const std::vector<Complex>& candidates,
                                   int count) {
  // Canonical candidate set: real values plus both members of each pair.
  std::vector<Complex> set;
  for (Complex z : candidates) {
    z = clean(z);
    if (z.real() >= 0.0) continue;
    if (is_real(z)) {
      set.push_back(z);
    } else {
      set.push_back({z.real(), std::abs(z.imag())});
      set.push_back({z.real(), -std::abs(z.imag())});
    }
  }
  std::sort(set.begin(), set.end(), [](Complex a, Complex b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() > b.imag());
  });
  set.erase(std::unique(set.begin(), set.end()), set.end());

  auto with_pair = [](Complex z) {
    std::vector<Complex> out{z};
    if (!is_real(z)) out.push_back(std::conj(z));
    return out;
  };
  auto upper = [](Complex z) { return Complex(z.real(), std::abs(z.imag())); };

  std::vector<Complex> chosen;
  if (static_cast<int>(set.size()) <= count) {
    for (Complex z : set) {
      if (z.imag() >= 0.0) {
        for (Complex w : with_pair(z)) chosen.push_back(w);
      }
    }
    return chosen;
  }

  // Start with the candidate whose rational function is smallest on the set.
  // A single shift can only be real unless there is no real candidate.
  const bool real_only =
      count < 2 && std::any_of(set.begin(), set.end(), is_real);
  double best = std::numeric_limits<double>::infinity();
  Complex p0 = set.front();
  for (Complex z : set) {
    if (real_only && !is_real(z)) continue;
    const auto poles = with_pair(upper(z));
    double worst = 0.0;
    for (Complex x : set) worst = std::max(worst, rational_magnitude(poles, x));
    if (worst < best) {
      best = worst;
      p0 = upper(z);
    }
  }
  chosen = with_pair(p0);
  while (static_cast<int>(chosen.size()) < count) {
    double worst = 0.0;
    Complex pick = set.front();
    for (Complex x : set) {
      const double value = rational_magnitude(chosen, x);
      if (value > worst) {
        worst = value;
        pick = x;
      }
    }
    if (worst == 0.0) break;
    const auto next = with_pair(upper(pick));
    if (static_cast<int>(chosen.size() + next.size()) > count) break;
    chosen.insert(chosen.end(), next.begin(), next.end());
  }
  return chosen;
}

std::vector<Complex> compute_shifts(const LyapunovProblem& problem,
                                    const AdiOptions& opts) {
  validate(problem);
  if (opts.shift_count < 1) {
    throw PreconditionViolation("shift_count must be at least 1");
  }
  std::vector<Complex> candidates;
  if (opts.shift_strategy == ShiftStrategy::projection_adaptive) {
    candidates = stable_only(projected_ritz(problem.op.transposed(),
                                            problem.massmat.transpose(),
                                            problem.rhs.columns()));
    if (static_cast<int>(candidates.size()) < opts.shift_count) {
      // A thin right-hand side spans too few directions; add heuristic values.
      log().debug("{} projection shifts, adding Arnoldi heuristic values", candidates.size());
      const auto extra = penzl_candidates(problem, opts);
      candidates.insert(candidates.end(), extra.begin(), extra.end());
    }
  } else {
    candidates = penzl_candidates(problem, opts);
  }
  std::vector<Complex> shifts = select_shifts(candidates, opts.shift_count);
  if (shifts.empty()) {
    throw ShiftFailure("no stable Ritz values available as ADI shifts");
  }
  return shifts;
}

LyapunovResult solve_lr_adi(const LyapunovProblem& problem,
                            const AdiOptions& opts) {
  validate(problem);
  if (!(opts.res_tol > 0.0)) {
    throw PreconditionViolation("ADI residual tolerance must be positive");
  }
  const Index n = problem.op.rows();
  const LowRankUpdatedOperator aa = problem.op.transposed();
  const SparseMatrix ee = problem.massmat.transpose();
  const DenseMatrix& s = problem.rhs.kernel();
  DenseMatrix w = problem.rhs.columns();

  LyapunovResult result;
  const double rhs_norm = sym_two_norm(problem.rhs);
  if (rhs_norm == 0.0) {
    result.solution = LdlFactor::zero(n);
    result.residual = problem.rhs;
    result.history.push_back(0.0);
    return result;
  }

  std::ofstream trace;
  if (!opts.trace_path.empty()) {
    trace.open(opts.trace_path);
    if (!trace) throw Error("cannot write ADI trace " + opts.trace_path);
    trace << "iter,residual,shift_re,shift_im\n";
  }

  ShiftedSolverCache cache(aa, ee, opts.solver);
  std::vector<Complex> shifts = compute_shifts(problem, opts);
  std::size_t next = 0;
  std::vector<DenseMatrix> blocks;
  std::vector<double> weights;
  std::size_t cycle_start = 0;
  Index cycle_width = 0;

  int it = 0;
  while (it < opts.max_iters) {
    if (next >= shifts.size()) {
      next = 0;
      if (opts.shift_strategy == ShiftStrategy::projection_adaptive) {
        // Ritz values on the span of the blocks of the last cycle.
        DenseMatrix basis(n, cycle_width);
        Index at = 0;
        for (std::size_t i = cycle_start; i < blocks.size(); ++i) {
          basis.middleCols(at, blocks[i].cols()) = blocks[i];
          at += blocks[i].cols();
        }
        auto fresh = select_shifts(stable_only(projected_ritz(aa, ee, basis)), opts.shift_count);
        if (!fresh.empty()) shifts = std::move(fresh);
        cycle_start = blocks.size();
        cycle_width = 0;
      }
    }
    const Complex p = shifts[next];
    if (p.imag() == 0.0) {
      DenseMatrix v = cache.get(p).solve(w);
      w -= 2.0 * p.real() * (ee * v);
      weights.push_back(-2.0 * p.real());
      cycle_width += v.cols();
      blocks.push_back(std::move(v));
      next += 1;
      it += 1;
    } else {
      ComplexMatrix v = cache.get(p).solve(ComplexMatrix(w.cast<Complex>()));
      const double gamma2 = -4.0 * p.real();
      const double delta = p.real() / p.imag();
      DenseMatrix v1 = v.real() + delta * v.imag();
      DenseMatrix v2 = std::sqrt(delta * delta + 1.0) * v.imag();
      w += gamma2 * (ee * v1);
      cycle_width += v1.cols() + v2.cols();
      blocks.push_back(std::move(v1));
      blocks.push_back(std::move(v2));
      weights.push_back(gamma2);
      weights.push_back(gamma2);
      // The conjugate partner is consumed by the double step.
      next += (next + 1 < shifts.size() && shifts[next + 1] == std::conj(p)) ? 2 : 1;
      it += 2;
    }

    const double res = sym_two_norm(w, s) / rhs_norm;
    result.history.push_back(res);
    if (trace.is_open()) {
      trace << it << ',' << res << ',' << p.real() << ',' << p.imag() << '\n';
    }
    if (!std::isfinite(res)) {
      throw InnerSolveFailure("ADI residual became non-finite");
    }
    if (res <= opts.res_tol) break;
    if (opts.abs_fro_tol > 0.0 && sym_frobenius_norm(w, s) <= opts.abs_fro_tol) {
      break;
    }
    const std::size_t h = result.history.size();
    if (h > 10) {
      const double recent = *std::min_element(result.history.end() - 10,
                                              result.history.end());
      if (recent > 0.99 * result.history[h - 11]) {
        const std::string msg = fmt::format(
            "ADI residual decreased by less than 1% over 10 steps ({:.3e})", res);
        if (res > opts.stagnation_floor) throw Stagnation(msg);
        // Roundoff level reached; the caller judges the result.
        log().info("{}; stopping", msg);
        break;
      }
    }
  }

  Index width = 0;
  for (const auto& b : blocks) width += b.cols();
  DenseMatrix left(n, width);
  DenseMatrix center = DenseMatrix::Zero(width, width);
  Index at = 0;
  const Index q = s.rows();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    left.middleCols(at, q) = blocks[i];
    center.block(at, at, q, q) = weights[i] * s;
    at += q;
  }
  result.solution = LdlFactor(std::move(left), std::move(center));
  result.residual = ResidualFactor(std::move(w), s);
  result.iterations = it;
  if (result.history.back() > opts.res_tol) {
    log().info("ADI stopped after {} iterations at relative residual {:.3e}",
               it, result.history.back());
  }
  return result;
}

namespace {

// Bartels-Stewart with the real Schur form of E^{-1} a kept for repeated
// right-hand sides. With Y = E^T X E the equation reads F^T Y + Y F = -m.
class DenseLyapunovSolver {
 public:
  DenseLyapunovSolver(const DenseMatrix& a, const DenseMatrix& e)
      : n_(a.rows()), e_lu_(e), et_lu_(e.transpose()) {
    if (a.cols() != n_) throw NotSquare("Lyapunov operator");
    if (e.rows() != n_ || e.cols() != n_) {
      throw DimensionMismatch("Lyapunov coefficients differ in size");
    }
    if (n_ == 0) return;
    if (!(e_lu_.rcond() > kEps)) throw SingularPencil("E is singular");
    t_ = e_lu_.solve(a);
    u_.resize(n_, n_);
    DenseVector wr(n_), wi(n_);
    lapack_int sdim = 0;
    const lapack_int ln = lapack_int(n_);
    if (LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, ln, t_.data(), ln, &sdim, wr.data(),
                      wi.data(), u_.data(), ln) != 0) {
      throw SingularPencil("Schur decomposition did not converge");
    }
    const double tol = 1e3 * kEps * std::max(t_.norm(), 1e-300);
    for (Index i = 0; i < n_; ++i) {
      for (Index j = 0; j < n_; ++j) {
        if (std::hypot(wr(i) + wr(j), wi(j) - wi(i)) <= tol) {
          throw SingularPencil("eigenvalues pair to zero (lambda_i + lambda_j = 0)");
        }
      }
    }
  }

  DenseMatrix solve(const DenseMatrix& m) const {
    if (m.rows() != n_ || m.cols() != n_) {
      throw DimensionMismatch("Lyapunov coefficients differ in size");
    }
    if (n_ == 0) return DenseMatrix(0, 0);
    // T^T Z + Z T = -U^T m U with T quasi-triangular.
    DenseMatrix z = -(u_.transpose() * m * u_);
    double scale = 1.0;
    const lapack_int ln = lapack_int(n_);
    if (LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'T', 'N', 1, ln, ln, t_.data(), ln, t_.data(), ln,
                       z.data(), ln, &scale) < 0) {
      throw SingularPencil("triangular Sylvester solve failed");
    }
    const DenseMatrix y = u_ * (z / scale) * u_.transpose();
    const DenseMatrix half = et_lu_.solve(y);
    const DenseMatrix x = et_lu_.solve(DenseMatrix(half.transpose()));
    return 0.5 * (x + x.transpose());
  }

 private:
  Index n_;
  Eigen::PartialPivLU<DenseMatrix> e_lu_;
  Eigen::PartialPivLU<DenseMatrix> et_lu_;
  DenseMatrix t_;
  DenseMatrix u_;
};

}  // namespace

DenseMatrix solve_dense_lyapunov(const DenseMatrix& a, const DenseMatrix& e,
                                 const DenseMatrix& m) {
  return DenseLyapunovSolver(a, e).solve(m);
}

DenseMatrix solve_kron(const LyapunovProblem& problem) {
  validate(problem);
  const Index n = problem.op.rows();
  const DenseMatrix a = problem.op.to_dense();
  const DenseMatrix e = DenseMatrix(problem.massmat);
  const DenseMatrix m = problem.rhs.to_dense();
  if (n > kKroneckerMaxOrder) return solve_dense_lyapunov(a, e, m);

  // (E^T kron A^T + A^T kron E^T) vec(X) = -vec(M)
  const Index nn = n * n;
  DenseMatrix k = DenseMatrix::Zero(nn, nn);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) =
          e(j, i) * a.transpose() + a(j, i) * e.transpose();
    }
  }
  Eigen::FullPivLU<DenseMatrix> lu(k);
  lu.setThreshold(1e2 * kEps);
  if (!lu.isInvertible()) throw SingularPencil("Kronecker sum is singular");
  DenseVector vec_m = Eigen::Map<const DenseVector>(m.data(), nn);
  DenseVector vec_x = lu.solve(DenseVector(-vec_m));
  DenseMatrix x = Eigen::Map<DenseMatrix>(vec_x.data(), n, n);
  return 0.5 * (x + x.transpose());
}

DenseMatrix lyapunov_residual(const LyapunovProblem& problem,
                              const DenseMatrix& x) {
  const DenseMatrix a = problem.op.to_dense();
  const DenseMatrix e = DenseMatrix(problem.massmat);
  DenseMatrix r = a.transpose() * x * e;
  r = r + r.transpose().eval();
  r += problem.rhs.to_dense();
  return 0.5 * (r + r.transpose());
}

LyapunovResult solve_dense_factored(const LyapunovProblem& problem,
                                    double compress_tol) {
  validate(problem);
  const DenseMatrix a = problem.op.to_dense();
  const DenseMatrix e = DenseMatrix(problem.massmat);
  const DenseLyapunovSolver solver(a, e);
  DenseMatrix x = solver.solve(problem.rhs.to_dense());
  // One refinement sweep on the residual.
  x += solver.solve(lyapunov_residual(problem, x));
  LyapunovResult result;
  result.solution = factor_dense(x, compress_tol);
  const DenseMatrix res = lyapunov_residual(problem, result.solution.to_dense());
  result.residual = ResidualFactor(factor_dense(res, 0.0));
  const double rhs_norm = sym_two_norm(problem.rhs);
  result.history.push_back(rhs_norm == 0.0 ? 0.0
                                           : symmetric_two_norm(res) / rhs_norm);
  result.iterations = 1;
  return result;
}

bool pencil_is_hurwitz(const LyapunovProblem& problem) {
  if (problem.op.rows() > kDenseThreshold) return true;
  return is_hurwitz(
      small_eigs(problem.op.to_dense(), DenseMatrix(problem.massmat)));
}

}  // namespace riccati
