#include "riccati/care_forms.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <lapacke.h>

#include "riccati/errors.hpp"
#include "riccati/lyapunov.hpp"

namespace riccati {

std::string to_string(Family family) {
  switch (family) {
    case Family::general: return "general";
    case Family::lqg: return "lqg";
    case Family::hinf: return "hinf";
    case Family::bounded_real: return "bounded_real";
    case Family::positive_real: return "positive_real";
  }
  return "general";
}

Family family_from_string(const std::string& name) {
  if (name == "general") return Family::general;
  if (name == "lqg") return Family::lqg;
  if (name == "hinf") return Family::hinf;
  if (name == "bounded_real" || name == "br") return Family::bounded_real;
  if (name == "positive_real" || name == "pr") return Family::positive_real;
  throw ConfigError("unknown equation family '" + name + "'");
}

namespace {

DenseMatrix weight_or_identity(const std::optional<DenseMatrix>& w, Index size,
                               const char* what) {
  if (!w) return DenseMatrix::Identity(size, size);
  if (w->rows() != size || w->cols() != size) {
    throw DimensionMismatch(std::string(what) + " has the wrong size");
  }
  return *w;
}

bool positive_definite(const DenseMatrix& sym) {
  if (sym.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

CoefficientSet build_family(const FamilySpec& spec, const SystemMatrices& sys) {
  const Index n = sys.a.rows();
  const Index m = sys.b.cols();
  const Index p = sys.c.rows();
  if (sys.b.rows() != n || sys.c.cols() != n) {
    throw DimensionMismatch("B and C must match A");
  }
  CoefficientSet out;
  out.a = sys.a;
  out.e = sys.e.size() == 0 ? sparse_identity(n) : sys.e;
  out.a.makeCompressed();
  out.e.makeCompressed();
  out.b = sys.b;
  out.c = sys.c;
  out.s = DenseMatrix::Zero(n, m);

  const DenseMatrix d = spec.feedthrough.value_or(DenseMatrix::Zero(p, m));
  if (d.rows() != p || d.cols() != m) {
    throw DimensionMismatch("feedthrough D must be p x m");
  }

  switch (spec.kind) {
    case Family::general: {
      out.q = weight_or_identity(spec.q_tilde, p, "Q");
      out.r = weight_or_identity(spec.r_tilde, m, "R");
      if (spec.cross) out.s = *spec.cross;
      break;
    }
    case Family::lqg: {
      out.q = weight_or_identity(spec.q_tilde, p, "Q~");
      out.r = weight_or_identity(spec.r_tilde, m, "R~") + d.transpose() * d;
      out.s = sys.c.transpose() * d;
      out.feedthrough = d;
      break;
    }
    case Family::hinf: {
      if (!spec.gamma || !(*spec.gamma > 0.0)) {
        throw PreconditionViolation("H-infinity family needs gamma > 0");
      }
      const auto [m1, m2] = spec.split.value_or(std::pair<Index, Index>{m / 2, m - m / 2});
      if (m1 + m2 != m || m1 < 0 || m2 < 0) {
        throw DimensionMismatch("input split does not add up to m");
      }
      out.q = weight_or_identity(spec.q_tilde, p, "Q~");
      out.r = block_diagonal({DenseMatrix(-(*spec.gamma) * (*spec.gamma) *
                                          DenseMatrix::Identity(m1, m1)),
                              weight_or_identity(spec.r_tilde, m2, "R~")});
      break;
    }
    case Family::bounded_real: {
      if (!spec.gamma || !(*spec.gamma > 0.0)) {
        throw PreconditionViolation("bounded-real family needs gamma > 0");
      }
      const double g2 = *spec.gamma * *spec.gamma;
      const DenseMatrix margin = g2 * DenseMatrix::Identity(m, m) - d.transpose() * d;
      if (!positive_definite(margin)) {
        throw DefinitenessViolation("gamma^2 I - D^T D is not positive definite");
      }
      out.q = DenseMatrix::Identity(p, p);
      out.r = -margin;
      out.s = sys.c.transpose() * d;
      out.feedthrough = d;
      break;
    }
    case Family::positive_real: {
      if (p != m) throw DimensionMismatch("positive-real family needs p = m");
      const DenseMatrix sym = d.transpose() + d;
      Eigen::FullPivLU<DenseMatrix> lu(sym);
      if (!lu.isInvertible()) {
        throw DefinitenessViolation("D^T + D is singular");
      }
      out.q = DenseMatrix::Zero(p, p);
      out.r = -sym;
      out.s = -sys.c.transpose();
      out.feedthrough = DenseMatrix(-DenseMatrix::Identity(p, m));
      break;
    }
  }
  out.validate();
  return out;
}

DenseMatrix riccati_operator(const CoefficientSet& coeffs, const DenseMatrix& x) {
  if (coeffs.n() > kDenseThreshold) {
    throw PreconditionViolation("dense Riccati operator limited to small n");
  }
  const DenseMatrix a = DenseMatrix(coeffs.a);
  const DenseMatrix e = DenseMatrix(coeffs.e);
  const DenseMatrix lin = a.transpose() * x * e;
  const DenseMatrix g = coeffs.b.transpose() * x * e + coeffs.s.transpose();
  DenseMatrix r = lin + lin.transpose() +
                  coeffs.c.transpose() * coeffs.q * coeffs.c -
                  g.transpose() * coeffs.r_solve(g);
  return 0.5 * (r + r.transpose());
}

DenseMatrix feedback_from(const CoefficientSet& coeffs, const LdlFactor& x) {
  const DenseMatrix etl = coeffs.e.transpose() * x.left();
  const DenseMatrix btl = coeffs.b.transpose() * x.left();
  return coeffs.r_solve(btl * x.center() * etl.transpose() + coeffs.s.transpose());
}

ResidualFactor riccati_residual(const CoefficientSet& coeffs, const LdlFactor& x) {
  const Index n = coeffs.n();
  const Index l = x.rank();
  const Index p = coeffs.p();
  const Index m = coeffs.m();
  const DenseMatrix k = feedback_from(coeffs, x);
  DenseMatrix cols(n, 2 * l + p + m);
  cols << coeffs.a.transpose() * x.left(), coeffs.e.transpose() * x.left(),
      coeffs.c.transpose(), k.transpose();
  DenseMatrix kernel = DenseMatrix::Zero(cols.cols(), cols.cols());
  kernel.block(0, l, l, l) = x.center();
  kernel.block(l, 0, l, l) = x.center();
  kernel.block(2 * l, 2 * l, p, p) = coeffs.q;
  kernel.block(2 * l + p, 2 * l + p, m, m) = -coeffs.r;
  return ResidualFactor(std::move(cols), std::move(kernel));
}

MetricScales metric_scales(const CoefficientSet& coeffs) {
  MetricScales s;
  s.constant_norm = sym_two_norm(constant_term(coeffs));
  const DenseMatrix rs = coeffs.r_solve(coeffs.s.transpose());  // R^{-1} S^T
  s.a_hat_norm = two_norm(LowRankUpdatedOperator(coeffs.a, -coeffs.b, rs.transpose()));
  s.e_norm = two_norm(coeffs.e);
  s.gain_norm = sym_two_norm(
      coeffs.b, coeffs.r_solve(DenseMatrix::Identity(coeffs.m(), coeffs.m())));
  return s;
}

CareMetrics metrics(const MetricScales& s, double residual_norm, double x_norm) {
  CareMetrics out;
  out.res1 = s.constant_norm > 0.0 ? residual_norm / s.constant_norm
                                   : residual_norm;
  const double d2 = s.a_hat_norm * s.e_norm * x_norm + s.gain_norm;
  const double d3 = 2.0 * s.a_hat_norm * s.e_norm * x_norm + s.constant_norm +
                    s.e_norm * s.e_norm * x_norm * x_norm * s.gain_norm;
  out.res2 = d2 > 0.0 ? residual_norm / d2 : residual_norm;
  out.res3 = d3 > 0.0 ? residual_norm / d3 : residual_norm;
  return out;
}

CareMetrics metrics(const CoefficientSet& coeffs, const LdlFactor& x) {
  return metrics(metric_scales(coeffs), sym_two_norm(riccati_residual(coeffs, x)),
                 sym_two_norm(x));
}

CareMetrics metrics(const CoefficientSet& coeffs, const DenseMatrix& x) {
  return metrics(metric_scales(coeffs),
                 symmetric_two_norm(riccati_operator(coeffs, x)),
                 symmetric_two_norm(x));
}

double reldiff(const LdlFactor& x1, const LdlFactor& x2) {
  const double n1 = sym_two_norm(x1);
  const double n2 = sym_two_norm(x2);
  if (n1 == 0.0 && n2 == 0.0) return 0.0;
  return sym_two_norm(concat({x1, x2}, {1.0, -1.0})) / (0.5 * (n1 + n2));
}

double reldiff(const DenseMatrix& x1, const DenseMatrix& x2) {
  const double n1 = symmetric_two_norm(x1);
  const double n2 = symmetric_two_norm(x2);
  if (n1 == 0.0 && n2 == 0.0) return 0.0;
  return symmetric_two_norm(x1 - x2) / (0.5 * (n1 + n2));
}

namespace {

lapack_logical select_stable(const double* alphar, const double* /*alphai*/,
                             const double* beta) {
  return *beta != 0.0 && *alphar / *beta < 0.0;
}

}  // namespace

DenseMatrix stable_subspace_solution(const DenseMatrix& a, const DenseMatrix& e,
                                     const DenseMatrix& g, const DenseMatrix& qc) {
  const Index n = a.rows();
  if (n == 0) return DenseMatrix(0, 0);
  DenseMatrix h(2 * n, 2 * n);
  h << a, -g, -qc, -a.transpose();
  DenseMatrix m = DenseMatrix::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = e;
  m.bottomRightCorner(n, n) = e.transpose();

  const lapack_int nn = static_cast<lapack_int>(2 * n);
  lapack_int sdim = 0;
  DenseVector alphar(2 * n), alphai(2 * n), beta(2 * n);
  DenseMatrix vsl(1, 1), vsr(2 * n, 2 * n);
  const lapack_int info = LAPACKE_dgges(
      LAPACK_COL_MAJOR, 'N', 'V', 'S', select_stable, nn, h.data(), nn, m.data(), nn,
      &sdim, alphar.data(), alphai.data(), beta.data(), vsl.data(), 1, vsr.data(), nn);
  if (info != 0) {
    throw NoStabilizingSolution("ordered QZ failed (info " + std::to_string(info) + ")");
  }
  if (sdim != n) {
    throw NoStabilizingSolution("stable deflating subspace has dimension " +
                                std::to_string(sdim) + " instead of " + std::to_string(n));
  }
  const DenseMatrix y1 = vsr.topLeftCorner(n, n);
  const DenseMatrix y2 = vsr.bottomLeftCorner(n, n);
  // X = Y2 (E Y1)^{-1}, i.e. X^T = (E Y1)^{-T} Y2^T
  Eigen::PartialPivLU<DenseMatrix> lu(DenseMatrix((e * y1).transpose()));
  if (!(lu.rcond() > 1e2 * std::numeric_limits<double>::epsilon())) {
    throw NoStabilizingSolution("E Y1 is singular");
  }
  const DenseMatrix x = lu.solve(DenseMatrix(y2.transpose())).transpose();
  return 0.5 * (x + x.transpose());
}

DenseMatrix dense_care_oracle(const CoefficientSet& coeffs) {
  if (coeffs.n() > kDenseThreshold) {
    throw PreconditionViolation("dense CARE oracle limited to small n");
  }
  coeffs.validate();
  const ReformulatedSet hat = reformulate(coeffs);
  const DenseMatrix a_hat = hat.a_hat.to_dense();
  const DenseMatrix e = DenseMatrix(coeffs.e);
  const DenseMatrix g = coeffs.b * coeffs.r_solve(coeffs.b.transpose());
  const DenseMatrix qc = hat.c_hat.transpose() * hat.q_hat * hat.c_hat;
  DenseMatrix x = stable_subspace_solution(a_hat, e, g, 0.5 * (qc + qc.transpose()));

  // Defect correction: dense Newton steps from the subspace solution, kept
  // only while they reduce the residual.
  const MetricScales scales = metric_scales(coeffs);
  auto residual_of = [&](const DenseMatrix& cand) {
    return symmetric_two_norm(riccati_operator(coeffs, cand));
  };
  double res = residual_of(x);
  const DenseMatrix a = DenseMatrix(coeffs.a);
  for (int sweep = 0; sweep < 3 && res > 1e-14 * scales.constant_norm; ++sweep) {
    const DenseMatrix k = coeffs.r_solve(coeffs.b.transpose() * x * e + coeffs.s.transpose());
    DenseMatrix next;
    try {
      next = solve_dense_lyapunov(a - coeffs.b * k, e, build_constant_factor(coeffs, k).to_dense());
    } catch (const Error&) {
      break;
    }
    const double next_res = residual_of(next);
    if (!(next_res < res)) break;
    x = std::move(next);
    res = next_res;
  }

  const CareMetrics cm = metrics(coeffs, x);
  if (!(cm.res1 <= 1e-10)) {
    std::ostringstream msg;
    msg << "oracle residual res1 = " << std::scientific << cm.res1;
    throw NoStabilizingSolution(msg.str());
  }
  const DenseMatrix k = coeffs.r_solve(coeffs.b.transpose() * x * e + coeffs.s.transpose());
  if (!is_hurwitz(small_eigs(DenseMatrix(coeffs.a) - coeffs.b * k, e))) {
    throw NoStabilizingSolution("oracle solution does not stabilize the pencil");
  }
  return x;
}

}  // namespace riccati
