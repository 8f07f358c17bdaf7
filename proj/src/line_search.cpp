#include "riccati/line_search.hpp"

#include <cmath>
#include <limits>

#include "riccati/errors.hpp"

namespace riccati {

namespace {

constexpr double kMinStep = 1e-8;

double trace_of_product(const DenseMatrix& x, const DenseMatrix& y) {
  // trace(x y) without forming the product
  return x.cwiseProduct(y.transpose()).sum();
}

}  // namespace

TraceCoefficients trace_coefficients(const ResidualFactor& riccati_res,
                                     const ResidualFactor& lyap_res,
                                     const DenseMatrix& delta_k,
                                     const DenseMatrix& r) {
  const Index n = riccati_res.rows();
  if (lyap_res.rows() != n || delta_k.cols() != n || delta_k.rows() != r.rows() ||
      r.rows() != r.cols()) {
    throw DimensionMismatch("line-search factors do not match");
  }
  const DenseMatrix& u = riccati_res.columns();
  const DenseMatrix& d = riccati_res.kernel();
  const DenseMatrix& f = lyap_res.columns();
  const DenseMatrix& g = lyap_res.kernel();
  const DenseMatrix dk = delta_k.transpose();  // n x m

  // Small Gram blocks; everything below is independent of n.
  const DenseMatrix uu = u.transpose() * u;
  const DenseMatrix ff = f.transpose() * f;
  const DenseMatrix kk = dk.transpose() * dk;
  const DenseMatrix fu = f.transpose() * u;
  const DenseMatrix ku = dk.transpose() * u;
  const DenseMatrix kf = dk.transpose() * f;

  const DenseMatrix uud = uu * d;
  const DenseMatrix ffg = ff * g;
  const DenseMatrix kkr = kk * r;
  TraceCoefficients v;
  v[0] = trace_of_product(uud, uud);
  v[1] = trace_of_product(ffg, ffg);
  v[2] = trace_of_product(kkr, kkr);
  // tr(F^T U D U^T F G)
  v[3] = trace_of_product(DenseMatrix(fu * d * fu.transpose()), g);
  // tr(dK U D U^T dK^T R)
  v[4] = trace_of_product(DenseMatrix(ku * d * ku.transpose()), r);
  // tr(dK F G F^T dK^T R)
  v[5] = trace_of_product(DenseMatrix(kf * g * kf.transpose()), r);
  return v;
}

double quartic_eval(const TraceCoefficients& v, double xi) {
  const double s = 1.0 - xi;
  return s * s * v[0] + xi * xi * v[1] + xi * xi * xi * xi * v[2] +
         2.0 * xi * s * v[3] - 2.0 * xi * xi * s * v[4] - 2.0 * xi * xi * xi * v[5];
}

std::array<double, 4> derivative_coefficients(const TraceCoefficients& v) {
  return {2.0 * (v[3] - v[0]), 2.0 * (v[0] + v[1] - 2.0 * (v[3] + v[4])),
          6.0 * (v[4] - v[5]), 4.0 * v[2]};
}

LineSearchData exact_step(const TraceCoefficients& v) {
  LineSearchData out;
  out.v = v;
  out.a_hat = derivative_coefficients(v);
  const auto& ah = out.a_hat;
  const double norm = std::sqrt(ah[0] * ah[0] + ah[1] * ah[1] + ah[2] * ah[2] + ah[3] * ah[3]);
  if (norm == 0.0) {
    throw DegeneratePolynomial("all derivative coefficients vanish");
  }
  const double a1 = ah[0] / norm;
  const double a2 = ah[1] / norm;
  const double a3 = ah[2] / norm;
  const double a4 = ah[3] / norm;

  // Companion pencil of a1 + a2 x + a3 x^2 + a4 x^3; a4 = 0 shows up as an
  // infinite eigenvalue, so lower degrees need no separate branch.
  DenseMatrix pa(3, 3);
  pa << 0, 1, 0, 0, 0, 1, -a1, -a2, -a3;
  DenseMatrix pe = DenseMatrix::Identity(3, 3);
  pe(2, 2) = a4;
  std::vector<double> candidates;
  for (const auto& ev : small_eigs(pa, pe)) {
    if (ev.infinite) continue;
    const double x = ev.value.real();
    if (std::abs(ev.value.imag()) > 1e-10 * std::max(1.0, std::abs(x))) continue;
    if (x > 0.0 && x <= 2.0) candidates.push_back(x);
  }
  if (candidates.empty()) {
    if (std::abs(a4) == 0.0 && std::abs(a3) == 0.0 && std::abs(a2) == 0.0) {
      throw DegeneratePolynomial("constant derivative without a critical point");
    }
    out.xi = 1.0;
    out.fallback = true;
    return out;
  }
  double best_xi = candidates.front();
  double best_f = quartic_eval(v, best_xi);
  for (double x : candidates) {
    const double fx = quartic_eval(v, x);
    if (fx < best_f || (fx == best_f && x < best_xi)) {
      best_f = fx;
      best_xi = x;
    }
  }
  out.xi = std::max(best_xi, kMinStep);
  return out;
}

bool sufficient_decrease(double res_new, double res_old, double xi, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw PreconditionViolation("beta must lie in (0, 1)");
  }
  return res_new < (1.0 - xi * beta) * res_old;
}

LineSearchData armijo_step(const TraceCoefficients& v, double beta) {
  LineSearchData out;
  out.v = v;
  out.a_hat = derivative_coefficients(v);
  const double old_res = std::sqrt(std::max(v[0], 0.0));
  if (old_res == 0.0) {
    out.xi = 1.0;
    return out;
  }
  double xi = 1.0;
  for (int halving = 0; halving <= 30; ++halving) {
    const double new_res = std::sqrt(std::max(quartic_eval(v, xi), 0.0));
    if (sufficient_decrease(new_res, old_res, xi, beta)) {
      out.xi = xi;
      return out;
    }
    xi *= 0.5;
  }
  throw LineSearchFailure("no sufficient decrease after 30 halvings");
}

ResidualFactor damped_residual(const ResidualFactor& riccati_res,
                               const ResidualFactor& lyap_res,
                               const DenseMatrix& delta_k, const DenseMatrix& r,
                               double xi) {
  const ResidualFactor quad(delta_k.transpose(), r);
  return concat({riccati_res, lyap_res, quad}, {1.0 - xi, xi, -xi * xi});
}

}  // namespace riccati
