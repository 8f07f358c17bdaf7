#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/care.hpp"
#include "oracles/line_search_case.hpp"
#include "oracles/random.hpp"
#include "riccati/bench_gen.hpp"
#include "riccati/errors.hpp"
#include "riccati/line_search.hpp"
#include "riccati/newton.hpp"

using namespace riccati;
using namespace riccati::testing;

namespace {

double inner(const DenseMatrix& x, const DenseMatrix& y) { return (x.array() * y.array()).sum(); }

}  // namespace

TEST_CASE("trace coefficients equal dense Frobenius inner products") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    const StepInstance s = make_step(40, rng, trial % 2 == 1);
    const DenseMatrix quad = s.delta.transpose() * s.d.r * s.delta;
    const std::array<double, 6> want{inner(s.rk, s.rk),     inner(s.lyap, s.lyap),
                                     inner(quad, quad),     inner(s.rk, s.lyap),
                                     inner(s.rk, quad),     inner(s.lyap, quad)};
    const TraceCoefficients v = coefficients_of(s);
    double scale = 0.0;
    for (double w : want) scale = std::max(scale, std::abs(w));
    for (int i = 0; i < 6; ++i) CHECK(std::abs(v[i] - want[i]) <= 1e-11 * scale);
  }
}

TEST_CASE("quartic reproduces the dense residual along the Newton direction") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 6; ++trial) {
    const StepInstance s = make_step(12 + 4 * trial, rng, trial % 2 == 0);
    const TraceCoefficients v = coefficients_of(s);
    for (int i = 0; i <= 10; ++i) {
      const double xi = 0.2 * i;
      const DenseMatrix res = riccati_dense(s.d, s.xk + xi * (s.xk1 - s.xk));
      const double dense = res.squaredNorm();
      CHECK(std::abs(quartic_eval(v, xi) - dense) <= 1e-10 * std::max(dense, v[0]));
    }
  }
}

TEST_CASE("quartic degenerations and substitutions") {
  std::mt19937_64 rng(33);
  StepInstance s = make_step(10, rng, false);
  const TraceCoefficients v = coefficients_of(s);
  CHECK(quartic_eval(v, 0.0) == v[0]);
  CHECK(quartic_eval(v, 1.0) == doctest::Approx(v[1] + v[2] - 2.0 * v[5]));

  const TraceCoefficients zero_res =
      trace_coefficients(ResidualFactor(DenseMatrix::Zero(10, 1), DenseMatrix::Zero(1, 1)),
                         eig_factor(s.lyap), s.delta, s.d.r);
  CHECK(zero_res[0] == 0.0);
  CHECK(zero_res[3] == 0.0);
  CHECK(zero_res[4] == 0.0);

  const TraceCoefficients no_change = trace_coefficients(
      eig_factor(s.rk), eig_factor(s.lyap), DenseMatrix::Zero(2, 10), s.d.r);
  CHECK(no_change[2] == 0.0);
  CHECK(no_change[4] == 0.0);
  CHECK(no_change[5] == 0.0);
  for (double xi : {0.3, 1.1, 1.9}) {
    const TraceCoefficients& w = no_change;
    const double quad = (1 - xi) * (1 - xi) * w[0] + xi * xi * w[1] + 2 * xi * (1 - xi) * w[3];
    CHECK(quartic_eval(w, xi) == doctest::Approx(quad).epsilon(1e-14));
  }
  CHECK_THROWS_AS(trace_coefficients(eig_factor(s.rk), eig_factor(s.lyap),
                                     DenseMatrix::Zero(2, 9), s.d.r),
                  DimensionMismatch);
}

TEST_CASE("exact step: closed form and grid-search oracle") {
  const LineSearchData perfect = exact_step({1.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(perfect.xi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!perfect.fallback);
  CHECK_THROWS_AS(exact_step({0.0, 0.0, 0.0, 0.0, 0.0, 0.0}), DegeneratePolynomial);

  std::mt19937_64 rng(34);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_real_distribution<double> size(0.0, 0.8);
    const StepInstance s = make_step(8, rng, trial % 3 == 0, true, size(rng));
    const TraceCoefficients v = coefficients_of(s);
    if (!(v[2] > 0.0)) continue;
    const LineSearchData ls = exact_step(v);
    CHECK(quartic_eval(v, ls.xi) <= quartic_eval(v, 1.0) + 1e-12 * v[0]);
    // Brute force on a 1e-6 grid over (0, 2].
    double best = std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (int i = 1; i <= 2000000; ++i) {
      const double xi = 1e-6 * i;
      const double f = quartic_eval(v, xi);
      if (f < best) {
        best = f;
        arg = xi;
      }
    }
    // The step is chosen among critical points; a minimum at an endpoint is
    // not one.
    if (arg < 1e-5 || arg > 2.0 - 1e-5) continue;
    ++compared;
    CHECK(std::abs(ls.xi - arg) <= 1e-5);
  }
  CHECK(compared >= 20);
}

TEST_CASE("sufficient decrease") {
  CHECK(sufficient_decrease(0.0, 1.0, 0.5, 1e-4));
  CHECK(!sufficient_decrease(1.0, 1.0, 0.5, 1e-4));
  CHECK_THROWS_AS(sufficient_decrease(0.0, 1.0, 0.5, 1.0), PreconditionViolation);
  const std::array<double, 5> table{5.3610e-01, 3.5593e-02, 6.0872e-05, 1.5903e-10, 2.1316e-14};
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    CHECK(sufficient_decrease(table[i + 1], table[i], 1.0, 0.1));
  }
}

TEST_CASE("Armijo backtracking") {
  CHECK(armijo_step({2.0, 0.0, 0.0, 2.0, 0.0, 0.0}, 1e-4).xi == 1.0);
  CHECK(armijo_step({0.0, 1.0, 1.0, 0.0, 0.0, 0.0}, 1e-4).xi == 1.0);

  // f(xi) = (1 - xi)^2 + 4 xi^2: f(1) > f(0), but small steps decrease.
  const TraceCoefficients uphill{1.0, 4.0, 0.0, 0.0, 0.0, 0.0};
  const double beta = 1e-4;
  const LineSearchData ls = armijo_step(uphill, beta);
  CHECK(ls.xi < 1.0);
  CHECK(ls.xi > 0.0);
  CHECK(std::sqrt(quartic_eval(uphill, ls.xi)) < (1.0 - ls.xi * beta) * 1.0);
  // The previous trial step failed.
  CHECK(!(std::sqrt(quartic_eval(uphill, 2.0 * ls.xi)) < (1.0 - 2.0 * ls.xi * beta)));

  // f(xi) = 1 + 9 xi^2 never decreases.
  CHECK_THROWS_AS(armijo_step({1.0, 10.0, 0.0, 1.0, 0.0, 0.0}, beta), LineSearchFailure);
}

TEST_CASE("damped residual factors track the dense residual") {
  std::mt19937_64 rng(35);
  StepInstance s = make_step(14, rng, true);
  const double xi = 0.37;
  const ResidualFactor damped =
      damped_residual(eig_factor(s.rk), eig_factor(s.lyap), s.delta, s.d.r, xi);
  const DenseMatrix x_ls = s.xk + xi * (s.xk1 - s.xk);
  const DenseMatrix want = riccati_dense(s.d, x_ls);
  CHECK((damped.to_dense() - want).norm() <= 1e-10 * want.norm());
  CHECK(damped.width() == 14 + 14 + 2);

  // A second damped step starting from the accumulated factor.
  const DenseMatrix k_ls = feedback_dense(s.d, x_ls);
  const DenseMatrix x_next = x_ls + 0.05 * random_symmetric(14, rng);
  const DenseMatrix ak = s.d.a - s.d.b * k_ls;
  const DenseMatrix sk = s.d.s * k_ls;
  DenseMatrix lyap = ak.transpose() * x_next * s.d.e + s.d.e.transpose() * x_next * ak +
                     s.d.c.transpose() * s.d.q * s.d.c + k_ls.transpose() * s.d.r * k_ls - sk -
                     sk.transpose();
  const DenseMatrix delta = feedback_dense(s.d, x_next) - k_ls;
  const double xi2 = 0.8;
  const ResidualFactor twice = damped_residual(damped, eig_factor(lyap), delta, s.d.r, xi2);
  const DenseMatrix want2 = riccati_dense(s.d, x_ls + xi2 * (x_next - x_ls));
  CHECK((twice.to_dense() - want2).norm() <= 1e-10 * want2.norm());
  CHECK(twice.width() == damped.width() + 14 + 2);
}

TEST_CASE("line search inside the first convergence example") {
  NewtonOptions opts;
  opts.line_search = LineSearchMode::exact;
  const NewtonResult run = newton_solve(convergence_example(1), opts);
  CHECK(run.converged);
  int searched = 0;
  for (const StepRecord& step : run.report.steps) {
    if (!step.line_search) continue;
    ++searched;
    const auto& v = step.line_search->v;
    CHECK(quartic_eval(v, step.xi) <= quartic_eval(v, 1.0) + 1e-12 * v[0]);
  }
  CHECK(searched == int(run.report.steps.size()) - 1);
  CHECK(!run.report.steps.front().line_search);
}
