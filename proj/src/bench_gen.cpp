#include "riccati/bench_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "riccati/errors.hpp"
#include "riccati/matrix_market.hpp"

namespace riccati {

namespace {

DenseMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  DenseMatrix out(values.size(), values.begin()->size());
  Index i = 0;
  for (const auto& row : values) {
    Index j = 0;
    for (double x : row) out(i, j++) = x;
    ++i;
  }
  return out;
}

// Index range [lo, hi) of patch j out of count patches on [first, last).
std::pair<Index, Index> patch(Index first, Index last, Index j, Index count) {
  const Index len = last - first;
  return {first + j * len / count, first + (j + 1) * len / count};
}

bool negative_definite(const SparseMatrix& a) {
  Eigen::SimplicialLLT<SparseMatrix> llt(SparseMatrix(-a));
  return llt.info() == Eigen::Success;
}

bool positive_definite(const SparseMatrix& a) {
  Eigen::SimplicialLLT<SparseMatrix> llt(a);
  return llt.info() == Eigen::Success;
}

// Dense spectral check where affordable.
void require_hurwitz(const SystemMatrices& sys, const char* what) {
  if (sys.a.rows() > kDenseThreshold) return;
  if (!is_hurwitz(small_eigs(DenseMatrix(sys.a), DenseMatrix(sys.e)))) {
    throw PreconditionViolation(std::string(what) + " pencil is not Hurwitz");
  }
}

}  // namespace

std::array<CoefficientSet, 3> gen_convergence_examples() {
  const DenseMatrix a = rows({{2.0, 1.0}, {1.0, -3.0}});
  const DenseMatrix e = DenseMatrix::Identity(2, 2);
  const DenseMatrix b12 = rows({{1.0, 1.0}, {0.0, 2.0}});
  const DenseMatrix c12 = rows({{1.0, 1.0}});
  const DenseMatrix q12 = rows({{1.0}});
  const DenseMatrix b3 = rows({{1.0}, {1.0}});
  const DenseMatrix c3 = rows({{1.0, 1.0}, {0.0, 2.0}});
  const DenseMatrix q3 = rows({{1.0, 0.0}, {0.0, -2.0}});
  return {
      make_coefficients(a, e, b12, c12, q12, rows({{-1.0, 0.0}, {0.0, 1.5}}), {}),
      make_coefficients(a, e, b12, c12, q12, rows({{-1.0, 0.0}, {0.0, 2.0}}), {}),
      make_coefficients(a, e, b3, c3, q3, rows({{1.0}}), {}),
  };
}

CoefficientSet convergence_example(int which) {
  if (which < 1 || which > 3) throw PreconditionViolation("convergence examples are 1..3");
  return gen_convergence_examples()[which - 1];
}

SystemMatrices gen_heat_fdm(const HeatOptions& opts) {
  const Index g = opts.grid_n;
  if (g < 10) throw PreconditionViolation("heat grid needs at least 10 points per axis");
  if (opts.dims != 1 && opts.dims != 2) throw PreconditionViolation("heat dims must be 1 or 2");
  if (opts.m < 1 || opts.p < 1) throw PreconditionViolation("heat needs m, p >= 1");
  if (opts.collocated && opts.m != opts.p) {
    throw PreconditionViolation("collocated heat needs p = m");
  }
  const double h = 1.0 / double(g + 1);
  const Index n = opts.dims == 1 ? g : g * g;
  const double cell = opts.dims == 1 ? h : h * h;
  auto x_of = [&](Index i) { return double(i % g + 1) * h; };
  auto ix = [&](Index i) { return i % g; };
  auto iy = [&](Index i) { return i / g; };

  std::vector<Eigen::Triplet<double>> a_entries;
  std::vector<Eigen::Triplet<double>> e_entries;
  if (opts.dims == 1) {
    // Conductivity 1 + x evaluated at cell interfaces.
    // Interface j lies between unknowns j - 1 and j, at x = (j + 1/2) h.
    auto kappa = [&](Index j) { return (1.0 + (double(j) + 0.5) * h) / h; };
    for (Index i = 0; i < g; ++i) {
      const double x = x_of(i);
      const double left = kappa(i);
      const double right = kappa(i + 1);
      a_entries.emplace_back(i, i, -(left + right));
      if (i > 0) a_entries.emplace_back(i, i - 1, left);
      if (i + 1 < g) a_entries.emplace_back(i, i + 1, right);
      e_entries.emplace_back(i, i, cell * (1.0 + 0.5 * x));
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      a_entries.emplace_back(i, i, -4.0);
      if (ix(i) > 0) a_entries.emplace_back(i, i - 1, 1.0);
      if (ix(i) + 1 < g) a_entries.emplace_back(i, i + 1, 1.0);
      if (iy(i) > 0) a_entries.emplace_back(i, i - g, 1.0);
      if (iy(i) + 1 < g) a_entries.emplace_back(i, i + g, 1.0);
      e_entries.emplace_back(i, i, cell * (1.0 + 0.5 * x_of(i)));
    }
  }
  SystemMatrices sys;
  sys.a.resize(n, n);
  sys.a.setFromTriplets(a_entries.begin(), a_entries.end());
  sys.a.makeCompressed();
  sys.e.resize(n, n);
  sys.e.setFromTriplets(e_entries.begin(), e_entries.end());
  sys.e.makeCompressed();

  // Patches: 1D splits [0, g/4) among inputs and [3g/4, g) among outputs;
  // 2D does the same along y in the strips x < 1/4 and x > 3/4.
  auto fill = [&](Index count, Index x_lo, Index x_hi) {
    DenseMatrix cols = DenseMatrix::Zero(n, count);
    for (Index j = 0; j < count; ++j) {
      if (opts.dims == 1) {
        const auto [lo, hi] = patch(x_lo, x_hi, j, count);
        if (lo == hi) throw PreconditionViolation("heat grid too coarse for the patch count");
        for (Index i = lo; i < hi; ++i) cols(i, j) = cell;
      } else {
        const auto [lo, hi] = patch(0, g, j, count);
        if (lo == hi) throw PreconditionViolation("heat grid too coarse for the patch count");
        for (Index y = lo; y < hi; ++y) {
          for (Index x = x_lo; x < x_hi; ++x) cols(y * g + x, j) = cell;
        }
      }
    }
    return cols;
  };
  const Index quarter = std::max<Index>(1, g / 4);
  sys.b = fill(opts.m, 0, quarter);
  sys.c = opts.collocated ? DenseMatrix(sys.b.transpose())
                          : DenseMatrix(fill(opts.p, g - quarter, g).transpose());

  // The stiffness matrix is irreducibly diagonally dominant, so -A is
  // positive definite; a Cholesky factorization certifies it.
  if (!negative_definite(sys.a)) throw PreconditionViolation("heat operator is not definite");
  require_hurwitz(sys, "heat");
  return sys;
}

SystemMatrices gen_triple_chain(const TripleChainOptions& opts) {
  if (opts.masses < 3 || opts.masses % 3 != 0) {
    throw PreconditionViolation("triple chain needs a positive multiple of 3 masses");
  }
  if (!(opts.damping > 0.0)) {
    throw PreconditionViolation("triple chain needs positive damping (undamped chain is not Hurwitz)");
  }
  if (opts.m < 1 || opts.m > 4) throw PreconditionViolation("triple chain supports 1..4 inputs");
  for (int i = 0; i < 4; ++i) {
    if (!(opts.mass[i] > 0.0) || !(opts.stiffness[i] > 0.0)) {
      throw PreconditionViolation("triple chain masses and stiffnesses must be positive");
    }
  }
  const Index per = opts.masses / 3;
  const Index dof = opts.masses + 1;
  const Index coupling = opts.masses;

  std::vector<Eigen::Triplet<double>> k_entries;
  auto spring = [&](Index i, Index j, double k) {
    k_entries.emplace_back(i, i, k);
    if (j >= 0) {
      k_entries.emplace_back(j, j, k);
      k_entries.emplace_back(i, j, -k);
      k_entries.emplace_back(j, i, -k);
    }
  };
  DenseVector mass(dof);
  for (int chain = 0; chain < 3; ++chain) {
    const Index first = chain * per;
    const double k = opts.stiffness[chain];
    spring(first, -1, k);  // wall
    for (Index i = first; i < first + per; ++i) {
      mass(i) = opts.mass[chain];
      spring(i, i + 1 < first + per ? i + 1 : coupling, k);
    }
  }
  mass(coupling) = opts.mass[3];
  spring(coupling, -1, opts.stiffness[3]);

  SparseMatrix kmat(dof, dof);
  kmat.setFromTriplets(k_entries.begin(), k_entries.end());
  SparseMatrix mmat(dof, dof);
  for (Index i = 0; i < dof; ++i) mmat.insert(i, i) = mass(i);
  const SparseMatrix dmat = opts.damping * (mmat + kmat);

  const Index n = 2 * dof;
  std::vector<Eigen::Triplet<double>> a_entries;
  std::vector<Eigen::Triplet<double>> e_entries;
  auto add_block = [](std::vector<Eigen::Triplet<double>>& out, const SparseMatrix& blk,
                      Index r0, Index c0, double scale) {
    for (Index col = 0; col < blk.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(blk, col); it; ++it) {
        out.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
      }
    }
  };
  add_block(e_entries, kmat, 0, 0, 1.0);
  add_block(e_entries, mmat, dof, dof, 1.0);
  add_block(a_entries, kmat, 0, dof, 1.0);
  add_block(a_entries, kmat, dof, 0, -1.0);
  add_block(a_entries, dmat, dof, dof, -1.0);

  SystemMatrices sys;
  sys.a.resize(n, n);
  sys.a.setFromTriplets(a_entries.begin(), a_entries.end());
  sys.a.makeCompressed();
  sys.e.resize(n, n);
  sys.e.setFromTriplets(e_entries.begin(), e_entries.end());
  sys.e.makeCompressed();
  sys.b = DenseMatrix::Zero(n, opts.m);
  sys.b(dof + coupling, 0) = 1.0;
  for (Index j = 1; j < opts.m; ++j) sys.b(dof + (j - 1) * per, j) = 1.0;
  sys.c = sys.b.transpose();

  if (!positive_definite(kmat) || !positive_definite(dmat)) {
    throw PreconditionViolation("triple chain stiffness or damping is not definite");
  }
  require_hurwitz(sys, "triple chain");
  return sys;
}

SystemMatrices gen_random_system(const RandomOptions& opts) {
  if (opts.n < 1 || opts.m < 1 || opts.p < 1) {
    throw PreconditionViolation("random system needs n, m, p >= 1");
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  const Index n = opts.n;
  const double density = std::min(1.0, 5.0 / double(n));
  DenseMatrix a = DenseMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j || uniform(rng) < density) a(i, j) = normal(rng);
    }
  }
  // Shift so every Gershgorin disc lies left of -0.5.
  double bound = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    bound = std::max(bound, a(i, i) + a.row(i).cwiseAbs().sum() - std::abs(a(i, i)));
  }
  a.diagonal().array() -= bound + 0.5;
  SystemMatrices sys;
  sys.a = to_sparse(a);
  sys.e = sparse_identity(n);
  sys.b = DenseMatrix(n, opts.m);
  for (Index k = 0; k < sys.b.size(); ++k) sys.b.data()[k] = normal(rng);
  sys.c = DenseMatrix(opts.p, n);
  for (Index k = 0; k < sys.c.size(); ++k) sys.c.data()[k] = normal(rng);
  return sys;
}

double hinf_norm_estimate(const SystemMatrices& sys, const DenseMatrix& d) {
  const Index n = sys.a.rows();
  const SparseMatrix e = sys.e.size() == 0 ? sparse_identity(n) : sys.e;
  const LowRankUpdatedOperator op(sys.a);
  std::vector<double> freqs{0.0};
  for (int i = 0; i <= 80; ++i) freqs.push_back(std::pow(10.0, -4.0 + 0.1 * i));
  if (n <= kDenseThreshold) {
    for (Complex z : finite_values(small_eigs(DenseMatrix(sys.a), DenseMatrix(e)))) {
      if (z.imag() > 0.0) freqs.push_back(z.imag());
    }
  }
  double best = 0.0;
  for (double w : freqs) {
    // (A - i w E) x = B, so C (i w E - A)^{-1} B = -C x.
    const ComplexMatrix x = solve_shifted(op, Complex(0.0, -w), e, sys.b);
    const ComplexMatrix g = -sys.c.cast<Complex>() * x + d.cast<Complex>();
    Eigen::JacobiSVD<ComplexMatrix> svd(g);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

GeneratedProblem generate(const BenchmarkSpec& spec) {
  GeneratedProblem out;
  out.name = spec.name.empty() ? spec.generator : spec.name;
  out.family = spec.family.kind;
  const std::string& gen = spec.generator;
  if (gen == "convergence1" || gen == "convergence2" || gen == "convergence3") {
    out.coeffs = convergence_example(gen.back() - '0');
    return out;
  }
  SystemMatrices sys;
  if (gen == "heat1d" || gen == "heat2d") {
    HeatOptions heat = spec.heat;
    heat.dims = gen == "heat1d" ? 1 : 2;
    if (spec.family.kind == Family::positive_real) {
      heat.collocated = true;
      heat.p = heat.m;
    }
    sys = gen_heat_fdm(heat);
  } else if (gen == "triple_chain") {
    sys = gen_triple_chain(spec.chain);
  } else if (gen == "random") {
    sys = gen_random_system(spec.random);
    out.seed = spec.random.seed;
  } else {
    throw ConfigError("unknown generator '" + gen + "'");
  }

  FamilySpec family = spec.family;
  const Index m = sys.b.cols();
  const Index p = sys.c.rows();
  if (family.kind == Family::positive_real && !family.feedthrough) {
    family.feedthrough = DenseMatrix::Identity(p, m);
  }
  const bool needs_gamma =
      family.kind == Family::hinf || family.kind == Family::bounded_real;
  if (needs_gamma && !family.gamma) {
    DenseMatrix d = family.feedthrough.value_or(DenseMatrix::Zero(p, m));
    if (family.kind == Family::hinf) {
      // Disturbance channel: the first m1 inputs.
      const Index m1 = family.split ? family.split->first : m / 2;
      SystemMatrices dist = sys;
      dist.b = sys.b.leftCols(m1);
      d = DenseMatrix::Zero(p, m1);
      family.gamma = spec.gamma_factor * hinf_norm_estimate(dist, d);
    } else {
      family.gamma = spec.gamma_factor * hinf_norm_estimate(sys, d);
    }
  }
  out.gamma = family.gamma;
  out.coeffs = build_family(family, sys);
  return out;
}

void write_bundle(const std::filesystem::path& dir, const GeneratedProblem& problem) {
  std::filesystem::create_directories(dir);
  const CoefficientSet& c = problem.coeffs;
  write(dir / "A.mtx", c.a);
  write(dir / "E.mtx", c.e);
  write(dir / "B.mtx", c.b);
  write(dir / "C.mtx", c.c);
  write(dir / "Q.mtx", c.q);
  write(dir / "R.mtx", c.r);
  write(dir / "S.mtx", c.s);
  if (c.feedthrough) write(dir / "D.mtx", *c.feedthrough);
  nlohmann::json manifest = {{"name", problem.name},
                             {"n", c.n()},
                             {"m", c.m()},
                             {"p", c.p()},
                             {"family", to_string(problem.family)},
                             {"seed", problem.seed},
                             {"feedthrough", c.feedthrough.has_value()}};
  if (problem.gamma) manifest["gamma"] = *problem.gamma;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

GeneratedProblem read_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "A.mtx")) {
    throw ConfigError("no A.mtx in " + dir.string());
  }
  // The manifest is optional for hand-made bundles.
  nlohmann::json manifest = nlohmann::json::object();
  if (std::ifstream in(dir / "manifest.json"); in) {
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& err) {
      throw ConfigError("manifest.json: " + std::string(err.what()));
    }
  }
  GeneratedProblem out;
  out.name = manifest.value("name", dir.filename().string());
  out.family = family_from_string(manifest.value("family", "general"));
  out.seed = manifest.value("seed", std::uint64_t{0});
  if (manifest.contains("gamma")) out.gamma = manifest["gamma"].get<double>();
  CoefficientSet& c = out.coeffs;
  c.a = read_sparse(dir / "A.mtx");
  c.e = std::filesystem::exists(dir / "E.mtx") ? read_sparse(dir / "E.mtx")
                                               : sparse_identity(c.a.rows());
  c.b = read_dense(dir / "B.mtx");
  c.c = read_dense(dir / "C.mtx");
  c.q = read_dense(dir / "Q.mtx");
  c.r = read_dense(dir / "R.mtx");
  c.s = std::filesystem::exists(dir / "S.mtx") ? read_dense(dir / "S.mtx")
                                               : DenseMatrix::Zero(c.a.rows(), c.b.cols());
  if (std::filesystem::exists(dir / "D.mtx")) c.feedthrough = read_dense(dir / "D.mtx");
  c.validate();
  return out;
}

}  // namespace riccati
