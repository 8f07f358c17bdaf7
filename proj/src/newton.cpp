#include "riccati/newton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "riccati/errors.hpp"
#include "riccati/log.hpp"

namespace riccati {

std::string to_string(LineSearchMode mode) {
  switch (mode) {
    case LineSearchMode::off: return "off";
    case LineSearchMode::exact: return "exact";
    case LineSearchMode::armijo: return "armijo";
  }
  return "off";
}

std::string to_string(InexactMode mode) {
  switch (mode) {
    case InexactMode::off: return "off";
    case InexactMode::superlinear: return "superlinear";
    case InexactMode::quadratic: return "quadratic";
  }
  return "off";
}

LineSearchMode line_search_from_string(const std::string& name) {
  if (name == "off") return LineSearchMode::off;
  if (name == "exact") return LineSearchMode::exact;
  if (name == "armijo") return LineSearchMode::armijo;
  throw ConfigError("unknown line search mode '" + name + "'");
}

InexactMode inexact_from_string(const std::string& name) {
  if (name == "off") return InexactMode::off;
  if (name == "superlinear") return InexactMode::superlinear;
  if (name == "quadratic") return InexactMode::quadratic;
  throw ConfigError("unknown inexact mode '" + name + "'");
}

void NewtonOptions::validate() const {
  if (!(outer_tol > 0.0)) throw PreconditionViolation("outer_tol must be positive");
  if (max_steps < 1) throw PreconditionViolation("max_steps must be at least 1");
  if (!(beta > 0.0 && beta < 1.0)) throw PreconditionViolation("beta must lie in (0, 1)");
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// The iteration in a form shared by the original and the S-free equation:
// a^T X E + E^T X a + c_cols q c_cols^T - (B^T X E + rs^T)^T R (...) with
// internal feedback K = R^{-1} (B^T X E) + rs^T. The feedback of the original
// equation is K + offset.
struct Problem {
  LowRankUpdatedOperator a;
  SparseMatrix e;
  DenseMatrix b;
  DenseMatrix r;
  Eigen::PartialPivLU<DenseMatrix> r_lu;
  DenseMatrix c_cols;
  DenseMatrix q;
  DenseMatrix rs;  // (R^{-1} S^T)^T; empty without a cross term
  DenseMatrix offset;
  MetricScales scales;

  Index n() const { return a.rows(); }
  Index m() const { return b.cols(); }
  bool cross() const { return rs.size() > 0; }

  DenseMatrix r_solve(const DenseMatrix& rhs) const {
    DenseMatrix x = r_lu.solve(rhs);
    if (!x.allFinite()) throw RSolveFailure("R solve produced non-finite values");
    return x;
  }

  void factor_r() {
    r_lu.compute(r);
    const double rcond = r.size() == 0 ? 1.0 : r_lu.rcond();
    if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
      throw RSolveFailure("R is numerically singular");
    }
  }

  ResidualFactor constant_factor(const DenseMatrix& k) const {
    if (!cross()) {
      DenseMatrix cols(n(), c_cols.cols() + m());
      cols << c_cols, k.transpose();
      return ResidualFactor(std::move(cols), block_diagonal({q, r}));
    }
    DenseMatrix cols(n(), c_cols.cols() + 2 * m());
    cols << c_cols, rs, k.transpose() - rs;
    return ResidualFactor(std::move(cols), block_diagonal({q, DenseMatrix(-r), r}));
  }

  DenseMatrix feedback(const LdlFactor& x) const {
    const DenseMatrix etl = e.transpose() * x.left();
    const DenseMatrix btl = b.transpose() * x.left();
    DenseMatrix k = r_solve(btl * x.center() * etl.transpose());
    if (cross()) k += rs.transpose();
    return k;
  }

  // a - B K, the closed-loop operator of the original equation.
  LowRankUpdatedOperator closed_loop(const DenseMatrix& k) const {
    return a.with_update(-b, k.transpose());
  }
};

MetricScales problem_scales(const Problem& pb, const ResidualFactor& constant) {
  MetricScales s;
  s.constant_norm = sym_two_norm(constant);
  s.a_hat_norm = two_norm(pb.cross() ? pb.a.with_update(-pb.b, pb.rs) : pb.a);
  s.e_norm = two_norm(pb.e);
  s.gain_norm = sym_two_norm(pb.b, pb.r_solve(DenseMatrix::Identity(pb.m(), pb.m())));
  return s;
}

Problem from_coefficients(const CoefficientSet& coeffs) {
  coeffs.validate();
  Problem pb;
  pb.a = LowRankUpdatedOperator(coeffs.a);
  pb.e = coeffs.e;
  pb.b = coeffs.b;
  pb.r = coeffs.r;
  pb.factor_r();
  pb.c_cols = coeffs.c.transpose();
  pb.q = coeffs.q;
  if (coeffs.has_cross_term()) pb.rs = pb.r_solve(coeffs.s.transpose()).transpose();
  pb.offset = DenseMatrix::Zero(coeffs.m(), coeffs.n());
  pb.scales = problem_scales(pb, constant_term(coeffs));
  return pb;
}

Problem from_reformulated(const ReformulatedSet& coeffs) {
  Problem pb;
  pb.a = coeffs.a_hat;
  pb.e = coeffs.e;
  pb.b = coeffs.b;
  pb.r = coeffs.r;
  pb.factor_r();
  const ResidualFactor constant = coeffs.constant_term();
  pb.c_cols = constant.columns();
  pb.q = constant.kernel();
  pb.offset = coeffs.feedback_offset();
  pb.scales = problem_scales(pb, constant);
  return pb;
}

bool dense_hurwitz(const LowRankUpdatedOperator& op, const SparseMatrix& e) {
  return is_hurwitz(small_eigs(op.to_dense(), DenseMatrix(e)));
}

// Internal K_0 for the problem; see initial_feedback.
DenseMatrix initial_internal_feedback(const Problem& pb) {
  const DenseMatrix zero_true = -pb.offset;
  if (pb.n() > kDenseThreshold) {
    log().warn("n = {} exceeds the dense limit; using K_0 = 0 without a stability check",
               pb.n());
    return zero_true;
  }
  if (dense_hurwitz(pb.closed_loop(zero_true), pb.e)) return zero_true;

  DenseMatrix a_base = pb.a.to_dense();
  if (pb.cross()) a_base -= pb.b * pb.rs.transpose();
  const DenseMatrix e = DenseMatrix(pb.e);
  const DenseMatrix gain = pb.b * pb.r_solve(pb.b.transpose());
  DenseMatrix x;
  try {
    x = stable_subspace_solution(a_base, e, 0.5 * (gain + gain.transpose()),
                                 DenseMatrix::Zero(pb.n(), pb.n()));
  } catch (const Error& err) {
    throw StabilizationFailure(std::string("Bernoulli stabilization failed: ") + err.what());
  }
  DenseMatrix k = pb.r_solve(pb.b.transpose() * x * e);
  if (pb.cross()) k += pb.rs.transpose();
  if (!k.allFinite() || !dense_hurwitz(pb.closed_loop(k), pb.e)) {
    throw StabilizationFailure("initial feedback does not stabilize the pencil");
  }
  return k;
}

ResidualFactor compressed(const ResidualFactor& f) {
  return ResidualFactor(compress(LdlFactor(f.columns(), f.kernel())));
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& sym) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (sym + sym.transpose()),
                                                 Eigen::EigenvaluesOnly);
  const DenseVector& values = eig.eigenvalues();
  return {values.data(), values.data() + values.size()};
}

double forcing_term(InexactMode mode, int k, double res_f) {
  if (mode == InexactMode::superlinear) return 1.0 / (std::pow(double(k), 3) + 1.0);
  return std::min(0.1, 0.9 * res_f);
}

NewtonResult run(const Problem& pb, const NewtonOptions& opts, const AdiOptions& adi,
                 DenseMatrix k) {
  opts.validate();
  const Index n = pb.n();
  if (k.rows() != pb.m() || k.cols() != n) {
    throw DimensionMismatch("initial feedback must be m x n");
  }
  const bool use_dense = opts.inner == InnerSolver::dense ||
                         (opts.inner == InnerSolver::automatic && n <= kDenseThreshold);
  const bool diagnostics = n <= opts.diagnostics_max_n;
  const double exact_abs_tol = 0.1 * opts.outer_tol * pb.scales.constant_norm;
  const double res_scale = pb.scales.constant_norm > 0.0 ? pb.scales.constant_norm : 1.0;

  // Truncating X by delta perturbs R(X) by about
  // (2 ||A|| ||E|| + 2 ||E||^2 ||X|| ||B R^{-1} B^T||) delta; keep that below a
  // tenth of the stopping threshold, within [eps, eps n] relative to ||X||.
  const MetricScales& sc = pb.scales;
  auto compression_tol = [&](const LdlFactor& x) {
    const double upper = default_compression_tolerance(n);
    const double xnorm = sym_two_norm(x);
    const double sensitivity = 2.0 * sc.a_hat_norm * sc.e_norm +
                               2.0 * sc.e_norm * sc.e_norm * xnorm * sc.gain_norm;
    if (!(xnorm > 0.0) || !(sensitivity > 0.0)) return upper;
    const double tol = 0.1 * opts.outer_tol * res_scale / (sensitivity * xnorm);
    return std::clamp(tol, kEps, upper);
  };

  NewtonResult result;
  RunReport& report = result.report;
  report.name = opts.name;
  const auto run_start = Clock::now();

  bool inexact_active = opts.inexact != InexactMode::off && !use_dense;
  if (opts.inexact != InexactMode::off && use_dense) {
    report.events.push_back("inexact inner solves need the ADI path; solving exactly");
  }

  std::optional<LdlFactor> x_prev;
  std::optional<ResidualFactor> res_prev;
  double res_f_prev = 0.0;

  for (int step = 1; step <= opts.max_steps; ++step) {
    const auto step_start = Clock::now();
    StepRecord record;
    record.k = step;

    LyapunovProblem lp{pb.closed_loop(k), pb.e, pb.constant_factor(k)};
    // The previous step already computed the spectrum for this feedback.
    const bool stable = report.steps.empty() ? !diagnostics || pencil_is_hurwitz(lp)
                                             : report.steps.back().closed_loop_stable;
    if (diagnostics && !stable) {
      log().info("step {}: closed-loop pencil is not Hurwitz", step);
    }

    auto inner_solve = [&](double abs_tol) {
      if (use_dense) return solve_dense_factored(lp, kEps);
      AdiOptions inner = adi;
      inner.abs_fro_tol = abs_tol;
      try {
        return solve_lr_adi(lp, inner);
      } catch (const InnerSolveFailure&) {
        throw;
      } catch (const Error& err) {
        throw InnerSolveFailure("step " + std::to_string(step) + ": " + err.what());
      }
    };

    // X_{k+1}, K_{k+1} and R(X_{k+1}) = F G F^T - dK^T R dK.
    auto newton_step = [&](const LyapunovResult& lyap) {
      const DenseMatrix k_new = pb.feedback(lyap.solution);
      const DenseMatrix delta = k_new - k;
      DenseMatrix cols(n, lyap.residual.width() + pb.m());
      cols << lyap.residual.columns(), delta.transpose();
      ResidualFactor res(std::move(cols),
                         block_diagonal({lyap.residual.kernel(), DenseMatrix(-pb.r)}));
      return std::make_tuple(k_new, delta, res);
    };

    const bool inexact_now = inexact_active && res_prev.has_value();
    double abs_tol = exact_abs_tol;
    if (inexact_now) {
      abs_tol = std::max(exact_abs_tol,
                         forcing_term(opts.inexact, step - 1, res_f_prev) * res_f_prev);
    }
    LyapunovResult lyap = inner_solve(abs_tol);
    auto [k_new, delta, res_new] = newton_step(lyap);
    double res_f = sym_frobenius_norm(res_new);
    record.inner_iters = lyap.iterations;

    if (inexact_now && !(res_f < res_f_prev)) {
      std::ostringstream msg;
      msg << "step " << step << ": inexact solve did not decrease the residual ("
          << res_f << " >= " << res_f_prev << "); repeated exactly, inexactness disabled";
      report.events.push_back(msg.str());
      log().info("{}", msg.str());
      inexact_active = false;
      record.exact_restart = true;
      lyap = inner_solve(exact_abs_tol);
      std::tie(k_new, delta, res_new) = newton_step(lyap);
      res_f = sym_frobenius_norm(res_new);
      record.inner_iters += lyap.iterations;
    }
    if (!std::isfinite(res_f)) {
      throw InnerSolveFailure("step " + std::to_string(step) + ": non-finite residual");
    }

    LdlFactor x_new = use_dense ? lyap.solution
                                 : compress(lyap.solution, compression_tol(lyap.solution));

    if (opts.line_search != LineSearchMode::off && res_prev) {
      const TraceCoefficients v = trace_coefficients(*res_prev, lyap.residual, delta, pb.r);
      LineSearchData ls;
      try {
        ls = opts.line_search == LineSearchMode::exact ? exact_step(v)
                                                       : armijo_step(v, opts.beta);
      } catch (const DegeneratePolynomial&) {
        ls.v = v;
        ls.xi = 1.0;
        ls.fallback = true;
      } catch (const LineSearchFailure& err) {
        report.events.push_back("step " + std::to_string(step) + ": " + err.what() +
                                "; taking the full step");
        ls.v = v;
        ls.xi = 1.0;
        ls.fallback = true;
      }
      if (ls.xi != 1.0) {
        const double xi = ls.xi;
        res_new = compressed(damped_residual(*res_prev, lyap.residual, delta, pb.r, xi));
        const LdlFactor merged = concat({*x_prev, x_new}, {1.0 - xi, xi});
        x_new = compress(merged, compression_tol(merged));
        k_new = (1.0 - xi) * k + xi * k_new;
        res_f = sym_frobenius_norm(res_new);
      }
      ls.accepted = sufficient_decrease(res_f, res_f_prev, ls.xi, opts.beta);
      if (!ls.accepted) {
        log().info("step {}: no sufficient decrease with xi = {}", step, ls.xi);
      }
      record.xi = ls.xi;
      record.line_search = ls;
    }

    record.res1 = res_f / res_scale;
    record.rank = x_new.rank();
    record.metrics = metrics(pb.scales, sym_two_norm(res_new), sym_two_norm(x_new));
    if (diagnostics) {
      const auto eigs = small_eigs(pb.closed_loop(k_new).to_dense(), DenseMatrix(pb.e));
      record.closed_loop = finite_values(eigs);
      record.closed_loop_stable = is_hurwitz(eigs);
      if (x_prev) {
        record.diff_eigs = symmetric_eigenvalues(x_new.to_dense() - x_prev->to_dense());
      }
    }
    record.wall_time = seconds_since(step_start);
    log().info("step {}: res1 {:.4e}, rank {}, inner iterations {}, xi {}", step,
               record.res1, record.rank, record.inner_iters, record.xi);
    report.steps.push_back(record);

    result.state = NewtonState{step, k_new + pb.offset, x_new, lyap.residual, res_new,
                               record.res1};
    if (opts.keep_iterates) result.history.push_back(result.state);
    k = std::move(k_new);
    x_prev = std::move(x_new);
    res_prev = std::move(res_new);
    res_f_prev = res_f;

    if (record.res1 <= opts.outer_tol) {
      result.converged = true;
      break;
    }
  }

  report.converged = result.converged;
  report.total_time = seconds_since(run_start);
  if (!result.converged) {
    const std::string msg = fmt::format("no convergence within {} Newton steps (res1 {:.4e})",
                                        opts.max_steps, report.steps.back().res1);
    report.events.push_back(msg);
    if (opts.throw_on_max_steps) throw MaxStepsExceeded(msg);
    log().warn("{}", msg);
  }
  report.final_metrics = report.steps.back().metrics;
  result.solution = *x_prev;
  result.feedback = k + pb.offset;
  return result;
}

}  // namespace

DenseMatrix initial_feedback(const CoefficientSet& coeffs) {
  return initial_internal_feedback(from_coefficients(coeffs));
}

NewtonResult newton_solve(const CoefficientSet& coeffs, const NewtonOptions& opts,
                          const AdiOptions& adi) {
  const Problem pb = from_coefficients(coeffs);
  DenseMatrix k0 = opts.initial_feedback ? *opts.initial_feedback
                                         : initial_internal_feedback(pb);
  NewtonResult result = run(pb, opts, adi, std::move(k0));
  result.report.final_metrics = metrics(coeffs, result.solution);
  return result;
}

NewtonResult newton_solve(const ReformulatedSet& coeffs, const NewtonOptions& opts,
                          const AdiOptions& adi) {
  const Problem pb = from_reformulated(coeffs);
  DenseMatrix k0 = opts.initial_feedback ? DenseMatrix(*opts.initial_feedback - pb.offset)
                                         : initial_internal_feedback(pb);
  return run(pb, opts, adi, std::move(k0));
}

ResidualFactor riccati_residual_factor(const CoefficientSet& coeffs,
                                       const NewtonState& state,
                                       const DenseMatrix& prev_feedback) {
  const DenseMatrix delta = state.feedback - prev_feedback;
  if (delta.rows() != coeffs.m() || delta.cols() != coeffs.n()) {
    throw DimensionMismatch("feedback must be m x n");
  }
  const ResidualFactor& f = state.lyap_residual;
  DenseMatrix cols(coeffs.n(), f.width() + coeffs.m());
  cols << f.columns(), delta.transpose();
  return ResidualFactor(std::move(cols),
                        block_diagonal({f.kernel(), DenseMatrix(-coeffs.r)}));
}

}  // namespace riccati
