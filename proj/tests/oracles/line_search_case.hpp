#pragma once

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles/care.hpp"
#include "oracles/random.hpp"
#include "riccati/line_search.hpp"

namespace riccati::testing {

// Symmetric matrix as columns * kernel * columns^T via a dense eigensolve.
inline ResidualFactor eig_factor(const DenseMatrix& sym) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (sym + sym.transpose()));
  return ResidualFactor(eig.eigenvectors(), eig.eigenvalues().asDiagonal().toDenseMatrix());
}

// X_k, an arbitrary X_{k+1}, and everything the quartic needs, all dense.
struct StepInstance {
  DenseCare d;
  DenseMatrix xk, xk1, rk, lyap, delta;
};

// With newton_like, X_{k+1} is the exact Newton iterate plus a perturbation of
// relative size `perturb`; otherwise X_k plus a random symmetric matrix.
inline StepInstance make_step(Index n, std::mt19937_64& rng, bool indefinite_r,
                       bool newton_like = false, double perturb = 0.0) {
  StepInstance s;
  const Index m = 2, p = 3;
  s.d.a = random_stable(n, rng);
  s.d.e = random_spd(n, rng);
  s.d.b = random_matrix(n, m, rng);
  s.d.c = random_matrix(p, n, rng);
  s.d.q = random_symmetric(p, rng);
  s.d.r = random_spd(m, rng);
  if (indefinite_r) s.d.r(0, 0) = -s.d.r(0, 0) - 1.0;
  s.d.r = 0.5 * (s.d.r + s.d.r.transpose());
  s.d.s = 0.3 * random_matrix(n, m, rng);
  const DenseMatrix l = random_matrix(n, 3, rng) / std::sqrt(double(n));
  s.xk = l * random_symmetric(3, rng) * l.transpose();
  const DenseMatrix kk = feedback_dense(s.d, s.xk);
  if (newton_like) {
    const DenseMatrix newton = newton_iterates(s.d, kk, 1).front();
    const DenseMatrix noise = random_symmetric(n, rng);
    s.xk1 = newton + perturb * (newton - s.xk).norm() / noise.norm() * noise;
  } else {
    s.xk1 = s.xk + 0.1 * random_symmetric(n, rng) / std::sqrt(double(n));
  }
  const DenseMatrix kk1 = feedback_dense(s.d, s.xk1);
  const DenseMatrix ak = s.d.a - s.d.b * kk;
  const DenseMatrix sk = s.d.s * kk;
  s.lyap = ak.transpose() * s.xk1 * s.d.e + s.d.e.transpose() * s.xk1 * ak +
           s.d.c.transpose() * s.d.q * s.d.c + kk.transpose() * s.d.r * kk - sk - sk.transpose();
  s.lyap = 0.5 * (s.lyap + s.lyap.transpose());
  s.rk = riccati_dense(s.d, s.xk);
  s.delta = kk1 - kk;
  return s;
}

inline TraceCoefficients coefficients_of(const StepInstance& s) {
  return trace_coefficients(eig_factor(s.rk), eig_factor(s.lyap), s.delta, s.d.r);
}

}  // namespace riccati::testing
