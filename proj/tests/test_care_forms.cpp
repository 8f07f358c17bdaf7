#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/care.hpp"
#include "oracles/random.hpp"
#include "riccati/bench_gen.hpp"
#include "riccati/care_forms.hpp"
#include "riccati/errors.hpp"

using namespace riccati;
using namespace riccati::testing;

namespace {

double rel(const DenseMatrix& x, const DenseMatrix& ref) {
  const double scale = std::max(ref.norm(), 1e-300);
  return (x - ref).norm() / scale;
}

SystemMatrices random_system(Index n, Index m, Index p, std::mt19937_64& rng) {
  return {to_sparse(random_stable(n, rng)), to_sparse(random_spd(n, rng)),
          random_matrix(n, m, rng), random_matrix(p, n, rng)};
}

CoefficientSet scalar_care() {
  const DenseMatrix one = DenseMatrix::Ones(1, 1);
  return make_coefficients(-one, one, one, one, one, one, {});
}

}  // namespace

TEST_CASE("family mappings on direct substitution") {
  std::mt19937_64 rng(11);
  const SystemMatrices sys = random_system(4, 2, 2, rng);

  FamilySpec pr{Family::positive_real};
  pr.feedthrough = DenseMatrix::Identity(2, 2);
  const CoefficientSet p = build_family(pr, sys);
  CHECK(rel(p.r, -2.0 * DenseMatrix::Identity(2, 2)) == 0.0);
  CHECK(p.q.norm() == 0.0);
  // Sign chosen so that (B^T X E + S^T) = (B^T X E - C).
  CHECK(rel(p.s, -sys.c.transpose()) == 0.0);

  FamilySpec br{Family::bounded_real};
  br.feedthrough = DenseMatrix::Zero(2, 2);
  br.gamma = 2.0;
  const CoefficientSet b = build_family(br, sys);
  CHECK(rel(b.q, DenseMatrix::Identity(2, 2)) == 0.0);
  CHECK(rel(b.r, -4.0 * DenseMatrix::Identity(2, 2)) == 0.0);
  CHECK(b.s.norm() == 0.0);

  FamilySpec hinf{Family::hinf};
  hinf.gamma = 1.0;
  hinf.split = std::pair<Index, Index>{1, 1};
  hinf.r_tilde = DenseMatrix::Ones(1, 1);
  const CoefficientSet h = build_family(hinf, sys);
  CHECK(h.r(0, 0) == -1.0);
  CHECK(h.r(1, 1) == 1.0);
  CHECK(h.r(0, 1) == 0.0);
  CHECK(h.s.norm() == 0.0);

  FamilySpec lqg{Family::lqg};
  lqg.feedthrough = random_matrix(2, 2, rng);
  lqg.r_tilde = random_spd(2, rng);
  const CoefficientSet l = build_family(lqg, sys);
  const DenseMatrix& d = *lqg.feedthrough;
  CHECK(rel(l.r, *lqg.r_tilde + d.transpose() * d) < 1e-15);
  CHECK(rel(l.s, sys.c.transpose() * d) < 1e-15);
  REQUIRE(l.feedthrough);
}

TEST_CASE("family preconditions") {
  std::mt19937_64 rng(12);
  const SystemMatrices sys = random_system(3, 2, 2, rng);
  FamilySpec br{Family::bounded_real};
  br.feedthrough = 3.0 * DenseMatrix::Identity(2, 2);
  br.gamma = 2.0;
  CHECK_THROWS_AS(build_family(br, sys), DefinitenessViolation);

  FamilySpec pr{Family::positive_real};
  DenseMatrix skew(2, 2);
  skew << 0.0, 1.0, -1.0, 0.0;
  pr.feedthrough = skew;
  CHECK_THROWS_AS(build_family(pr, sys), DefinitenessViolation);

  FamilySpec hinf{Family::hinf};
  CHECK_THROWS_AS(build_family(hinf, sys), PreconditionViolation);
  CHECK(family_from_string(to_string(Family::bounded_real)) == Family::bounded_real);
  CHECK_THROWS_AS(family_from_string("nonsense"), ConfigError);
}

TEST_CASE("family round trip reproduces each family equation") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 6, m = 2, p = 2;
    const SystemMatrices sys = random_system(n, m, p, rng);
    const DenseMatrix a(sys.a), e(sys.e), bm = sys.b, c = sys.c;
    const DenseMatrix x = random_symmetric(n, rng);
    const DenseMatrix d = 0.3 * random_matrix(p, m, rng);
    auto sym = [](const DenseMatrix& mat) { return DenseMatrix(0.5 * (mat + mat.transpose())); };
    const DenseMatrix lin = a.transpose() * x * e + e.transpose() * x * a;
    const DenseMatrix bx = bm.transpose() * x * e;

    FamilySpec lqg{Family::lqg};
    lqg.feedthrough = d;
    lqg.q_tilde = random_spd(p, rng);
    lqg.r_tilde = random_spd(m, rng);
    {
      const DenseMatrix g = bx + d.transpose() * c;
      const DenseMatrix rr = *lqg.r_tilde + d.transpose() * d;
      const DenseMatrix want = sym(lin + c.transpose() * *lqg.q_tilde * c -
                                   g.transpose() * rr.inverse() * g);
      CHECK(rel(riccati_dense(dense_of(build_family(lqg, sys)), x), want) < 1e-13);
    }

    FamilySpec hinf{Family::hinf};
    hinf.gamma = 1.7;
    hinf.split = std::pair<Index, Index>{1, 1};
    hinf.r_tilde = DenseMatrix::Constant(1, 1, 0.8);
    {
      const DenseMatrix b1 = bm.leftCols(1), b2 = bm.rightCols(1);
      const DenseMatrix quad = b2 * b2.transpose() / 0.8 - b1 * b1.transpose() / (1.7 * 1.7);
      const DenseMatrix want =
          sym(lin + c.transpose() * c - e.transpose() * x * quad * x * e);
      CHECK(rel(riccati_dense(dense_of(build_family(hinf, sys)), x), want) < 1e-13);
    }

    FamilySpec br{Family::bounded_real};
    br.feedthrough = d;
    br.gamma = 3.0;
    {
      const DenseMatrix g = bx + d.transpose() * c;
      const DenseMatrix margin = 9.0 * DenseMatrix::Identity(m, m) - d.transpose() * d;
      const DenseMatrix want =
          sym(lin + c.transpose() * c + g.transpose() * margin.inverse() * g);
      CHECK(rel(riccati_dense(dense_of(build_family(br, sys)), x), want) < 1e-13);
    }

    FamilySpec pr{Family::positive_real};
    pr.feedthrough = DenseMatrix::Identity(p, m) + 0.2 * d;
    {
      const DenseMatrix g = bx - c;
      const DenseMatrix dd = *pr.feedthrough + pr.feedthrough->transpose();
      const DenseMatrix want = sym(lin + g.transpose() * dd.inverse() * g);
      CHECK(rel(riccati_dense(dense_of(build_family(pr, sys)), x), want) < 1e-13);
    }
  }
}

TEST_CASE("constant factor equals both expanded forms") {
  std::mt19937_64 rng(14);
  auto check = [&](const CoefficientSet& cs) {
    const DenseMatrix k = random_matrix(cs.m(), cs.n(), rng);
    const DenseMatrix s = cs.s;
    const DenseMatrix sk = s * k;
    const DenseMatrix direct = cs.c.transpose() * cs.q * cs.c + k.transpose() * cs.r * k -
                               sk - sk.transpose();
    // K^T R K - S K - K^T S^T = (K - R^{-1} S^T)^T R (K - R^{-1} S^T) - S R^{-1} S^T
    const DenseMatrix rinv = cs.r.inverse();
    const DenseMatrix shifted = k - rinv * s.transpose();
    const DenseMatrix switching = cs.c.transpose() * cs.q * cs.c +
                                  shifted.transpose() * cs.r * shifted -
                                  s * rinv * s.transpose();
    const ResidualFactor f = build_constant_factor(cs, k);
    CHECK(rel(f.to_dense(), direct) < 1e-13);
    CHECK(rel(f.to_dense(), switching) < 1e-12);
  };
  check(convergence_example(1));
  for (int trial = 0; trial < 5; ++trial) {
    CoefficientSet cs = make_coefficients(random_stable(10, rng), {}, random_matrix(10, 2, rng),
                                          random_matrix(3, 10, rng), random_symmetric(3, rng),
                                          random_symmetric(2, rng) + 3.0 * DenseMatrix::Identity(2, 2),
                                          random_matrix(10, 2, rng));
    check(cs);
    CHECK(build_constant_factor(cs, DenseMatrix::Zero(2, 10)).width() == 3 + 4);
  }
  const CoefficientSet ex = convergence_example(1);
  const ResidualFactor zero = build_constant_factor(ex, DenseMatrix::Zero(2, 2));
  CHECK(zero.width() == 1 + 2);
  CHECK(rel(zero.to_dense(), ex.c.transpose() * ex.q * ex.c) == 0.0);
}

TEST_CASE("reformulated equation expands to the original") {
  std::mt19937_64 rng(15);
  auto expand_hat = [](const ReformulatedSet& rs, const DenseMatrix& x) {
    const DenseMatrix a = rs.a_hat.to_dense();
    const DenseMatrix e(rs.e);
    const DenseMatrix gain = rs.b * rs.r.inverse() * rs.b.transpose();
    DenseMatrix out = a.transpose() * x * e + e.transpose() * x * a +
                      rs.c_hat.transpose() * rs.q_hat * rs.c_hat -
                      e.transpose() * x * gain * x * e;
    return DenseMatrix(0.5 * (out + out.transpose()));
  };
  {
    const CoefficientSet ex = convergence_example(1);
    const ReformulatedSet rs = reformulate(ex);
    CHECK(rel(rs.a_hat.to_dense(), DenseMatrix(ex.a)) == 0.0);
    CHECK(rs.c_hat.bottomRows(2).norm() == 0.0);
    CHECK(rel(rs.q_hat.bottomRightCorner(2, 2), -ex.r.inverse()) < 1e-15);
    for (int trial = 0; trial < 3; ++trial) {
      const DenseMatrix x = random_symmetric(2, rng);
      CHECK(rel(expand_hat(rs, x), riccati_dense(dense_of(ex), x)) < 1e-13);
    }
  }
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 8;
    const CoefficientSet cs = make_coefficients(
        random_stable(n, rng), random_spd(n, rng), random_matrix(n, 2, rng),
        random_matrix(3, n, rng), random_symmetric(3, rng),
        random_symmetric(2, rng) + 3.0 * DenseMatrix::Identity(2, 2), random_matrix(n, 2, rng));
    const ReformulatedSet rs = reformulate(cs);
    const DenseMatrix x = random_symmetric(n, rng);
    CHECK(rel(expand_hat(rs, x), riccati_dense(dense_of(cs), x)) < 1e-13);
    CHECK(rel(rs.a_hat.to_dense(),
              DenseMatrix(cs.a) - cs.b * cs.r.inverse() * cs.s.transpose()) < 1e-13);
    CHECK(!rs.reduced_q);
  }
}

TEST_CASE("feedthrough structure reduces the constant term") {
  std::mt19937_64 rng(16);
  const SystemMatrices sys = random_system(7, 2, 3, rng);
  FamilySpec lqg{Family::lqg};
  lqg.feedthrough = random_matrix(3, 2, rng);
  lqg.q_tilde = random_spd(3, rng);
  const CoefficientSet cs = build_family(lqg, sys);
  const ReformulatedSet rs = reformulate(cs);
  REQUIRE(rs.reduced_q);
  const DenseMatrix& d = *lqg.feedthrough;
  const DenseMatrix expect = *lqg.q_tilde - d * (DenseMatrix::Identity(2, 2) + d.transpose() * d).inverse() * d.transpose();
  CHECK(rel(*rs.reduced_q, expect) < 1e-13);
  const DenseMatrix full = rs.c_hat.transpose() * rs.q_hat * rs.c_hat;
  CHECK(rel(cs.c.transpose() * *rs.reduced_q * cs.c, full) < 1e-13);
  CHECK(rs.constant_term().width() == 3);
}

TEST_CASE("Riccati operator and its factored residual") {
  const CoefficientSet scalar = scalar_care();
  const DenseMatrix star = DenseMatrix::Constant(1, 1, std::sqrt(2.0) - 1.0);
  CHECK(std::abs(riccati_operator(scalar, star)(0, 0)) < 1e-14);
  CHECK(riccati_operator(scalar, DenseMatrix::Zero(1, 1))(0, 0) == 1.0);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 12;
    const CoefficientSet cs = make_coefficients(
        random_stable(n, rng), random_spd(n, rng), random_matrix(n, 2, rng),
        random_matrix(3, n, rng), random_symmetric(3, rng), random_symmetric(2, rng) + 3.0 * DenseMatrix::Identity(2, 2),
        random_matrix(n, 2, rng));
    const LdlFactor x(random_matrix(n, 4, rng), random_symmetric(4, rng));
    const DenseMatrix xd = x.to_dense();
    const DenseMatrix oracle = riccati_dense(dense_of(cs), xd);
    CHECK(rel(riccati_operator(cs, xd), oracle) < 1e-12);
    CHECK(rel(riccati_residual(cs, x).to_dense(), oracle) < 1e-12);
    CHECK(rel(feedback_from(cs, x), feedback_dense(dense_of(cs), xd)) < 1e-12);
  }
}

TEST_CASE("metric values against independently computed scalings") {
  const CoefficientSet ex = convergence_example(1);
  const CareMetrics zero = metrics(ex, LdlFactor::zero(2));
  CHECK(zero.res1 == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(18);
  const Index n = 9;
  const CoefficientSet cs = make_coefficients(
      random_stable(n, rng), random_spd(n, rng), random_matrix(n, 2, rng),
      random_matrix(2, n, rng), random_spd(2, rng), random_spd(2, rng), 0.2 * random_matrix(n, 2, rng));
  const LdlFactor x(random_matrix(n, 3, rng), random_symmetric(3, rng));
  const DenseCare d = dense_of(cs);
  const DenseMatrix xd = x.to_dense();
  const DenseMatrix rinv = d.r.inverse();
  const double res = two_norm_dense(riccati_dense(d, xd));
  const double constant = two_norm_dense(d.c.transpose() * d.q * d.c - d.s * rinv * d.s.transpose());
  const double ahat = two_norm_dense(d.a - d.b * rinv * d.s.transpose());
  const double en = two_norm_dense(d.e);
  const double xn = two_norm_dense(xd);
  const double gain = two_norm_dense(d.b * rinv * d.b.transpose());
  const CareMetrics factored = metrics(cs, x);
  const CareMetrics dense = metrics(cs, xd);
  CHECK(factored.res1 == doctest::Approx(res / constant).epsilon(1e-10));
  CHECK(factored.res2 == doctest::Approx(res / (ahat * en * xn + gain)).epsilon(1e-10));
  CHECK(factored.res3 ==
        doctest::Approx(res / (2 * ahat * en * xn + constant + en * en * xn * xn * gain)).epsilon(1e-10));
  CHECK(dense.res1 == doctest::Approx(factored.res1).epsilon(1e-12));
  CHECK(dense.res2 == doctest::Approx(factored.res2).epsilon(1e-12));
  CHECK(dense.res3 == doctest::Approx(factored.res3).epsilon(1e-12));
}

TEST_CASE("relative difference closed forms") {
  std::mt19937_64 rng(19);
  const LdlFactor x(random_matrix(6, 2, rng), random_symmetric(2, rng));
  const LdlFactor twice(x.left(), 2.0 * x.center());
  CHECK(reldiff(x, x) == doctest::Approx(0.0));
  CHECK(reldiff(x, twice) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(reldiff(x.to_dense(), twice.to_dense()) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(reldiff(LdlFactor::zero(6), LdlFactor::zero(6)) == 0.0);
}

TEST_CASE("dense oracle: closed forms and certificate") {
  const DenseMatrix scalar = dense_care_oracle(scalar_care());
  CHECK(scalar(0, 0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));

  const CoefficientSet ex2 = convergence_example(2);
  const DenseMatrix x2 = dense_care_oracle(ex2);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(x2);
  CHECK(eig.eigenvalues()(0) < 0.0);
  CHECK(eig.eigenvalues()(1) > 0.0);
  const DenseCare d2 = dense_of(ex2);
  Eigen::VectorXcd cl = pencil_eigenvalues(d2.a - d2.b * feedback_dense(d2, x2), d2.e);
  std::vector<double> re{cl(0).real(), cl(1).real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-4.0448).epsilon(1e-4));
  CHECK(re[1] == doctest::Approx(-1.4626).epsilon(1e-4));

  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = 5 + 3 * trial;
    // A handful of unstable modes near the imaginary axis.
    const DenseMatrix a = random_stable(n, rng) + 0.7 * DenseMatrix::Identity(n, n);
    const DenseMatrix c = random_matrix(2, n, rng);
    const DenseMatrix q = random_spd(2, rng);
    // S = C^T Q D with small D keeps C^T Q C - S R^{-1} S^T semidefinite.
    const DenseMatrix s = trial % 2 ? DenseMatrix(c.transpose() * q * 0.1 * random_matrix(2, 2, rng))
                                    : DenseMatrix();
    const CoefficientSet cs = make_coefficients(a, random_spd(n, rng), random_matrix(n, 2, rng),
                                                c, q, random_spd(2, rng) + DenseMatrix::Identity(2, 2), s);
    const DenseMatrix x = dense_care_oracle(cs);
    const DenseCare d = dense_of(cs);
    const double constant = two_norm_dense(d.c.transpose() * d.q * d.c -
                                           d.s * d.r.inverse() * d.s.transpose());
    CHECK(two_norm_dense(riccati_dense(d, x)) / constant <= 1e-10);
    CHECK(max_real(pencil_eigenvalues(d.a - d.b * feedback_dense(d, x), d.e)) < 0.0);
  }
}
