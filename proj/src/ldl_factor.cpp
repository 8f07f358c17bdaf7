#include "riccati/ldl_factor.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "riccati/errors.hpp"
#include "riccati/matrix_market.hpp"

namespace riccati {

SymmetricLowRank::SymmetricLowRank(DenseMatrix outer, DenseMatrix inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {
  if (inner_.rows() != inner_.cols()) throw NotSquare("center matrix");
  if (inner_.rows() != outer_.cols()) {
    throw DimensionMismatch("center size differs from the factor width");
  }
  inner_ = 0.5 * (inner_ + inner_.transpose()).eval();
}

DenseMatrix SymmetricLowRank::to_dense() const {
  DenseMatrix x = outer_ * inner_ * outer_.transpose();
  return 0.5 * (x + x.transpose());
}

LdlFactor LdlFactor::zero(Index n) {
  return LdlFactor(DenseMatrix(n, 0), DenseMatrix(0, 0));
}

double default_compression_tolerance(Index n) {
  return std::numeric_limits<double>::epsilon() *
         static_cast<double>(std::max<Index>(n, 1));
}

namespace {

// Orthonormal basis Q and projected kernel R K R^T with outer = Q R.
std::pair<DenseMatrix, DenseMatrix> project(const DenseMatrix& outer,
                                            const DenseMatrix& inner) {
  ThinQr qr = thin_qr(outer);
  DenseMatrix k = qr.triangular * inner * qr.triangular.transpose();
  return {std::move(qr.orthonormal), 0.5 * (k + k.transpose())};
}

LdlFactor truncate_eig(const DenseMatrix& basis, const DenseMatrix& kernel,
                       double rel_tol) {
  const Index n = basis.rows();
  if (kernel.size() == 0) return LdlFactor::zero(n);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(kernel);
  const auto& lambda = es.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  if (top == 0.0) return LdlFactor::zero(n);
  std::vector<Index> keep;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > rel_tol * top) keep.push_back(i);
  }
  DenseMatrix left(n, static_cast<Index>(keep.size()));
  DenseMatrix center = DenseMatrix::Zero(left.cols(), left.cols());
  for (Index c = 0; c < left.cols(); ++c) {
    left.col(c) = basis * es.eigenvectors().col(keep[c]);
    center(c, c) = lambda(keep[c]);
  }
  return LdlFactor(std::move(left), std::move(center));
}

template <typename Factor>
Factor concat_impl(const std::vector<Factor>& factors,
                   const std::vector<double>& weights) {
  if (factors.size() != weights.size()) {
    throw DimensionMismatch("one weight per factor is required");
  }
  if (factors.empty()) throw PreconditionViolation("nothing to concatenate");
  const Index n = factors.front().rows();
  Index total = 0;
  for (const auto& f : factors) {
    if (f.rows() != n) throw DimensionMismatch("factors differ in size");
    total += f.width();
  }
  DenseMatrix outer(n, total);
  DenseMatrix inner = DenseMatrix::Zero(total, total);
  Index at = 0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const Factor& f = factors[i];
    const Index w = f.width();
    outer.middleCols(at, w) = f.outer();
    inner.block(at, at, w, w) = weights[i] * f.inner();
    at += w;
  }
  return Factor(std::move(outer), std::move(inner));
}

}  // namespace

LdlFactor compress(const LdlFactor& factor, double rel_tol) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
    throw PreconditionViolation("compression tolerance must lie in (0, 1)");
  }
  if (factor.rank() == 0) return factor;
  auto [basis, kernel] = project(factor.left(), factor.center());
  return truncate_eig(basis, kernel, rel_tol);
}

LdlFactor compress(const LdlFactor& factor) {
  return compress(factor, default_compression_tolerance(factor.rows()));
}

LdlFactor factor_dense(const DenseMatrix& sym, double rel_tol) {
  if (sym.rows() != sym.cols()) throw NotSquare("symmetric matrix");
  return truncate_eig(DenseMatrix::Identity(sym.rows(), sym.rows()),
                      0.5 * (sym + sym.transpose()), rel_tol);
}

double sym_two_norm(const DenseMatrix& outer, const DenseMatrix& inner) {
  if (outer.cols() == 0) return 0.0;
  return symmetric_two_norm(project(outer, inner).second);
}

double sym_frobenius_norm(const DenseMatrix& outer, const DenseMatrix& inner) {
  if (outer.cols() == 0) return 0.0;
  return project(outer, inner).second.norm();
}

double sym_two_norm(const SymmetricLowRank& f) {
  return sym_two_norm(f.outer(), f.inner());
}

double sym_frobenius_norm(const SymmetricLowRank& f) {
  return sym_frobenius_norm(f.outer(), f.inner());
}

LdlFactor concat(const std::vector<LdlFactor>& factors,
                 const std::vector<double>& weights) {
  return concat_impl(factors, weights);
}

ResidualFactor concat(const std::vector<ResidualFactor>& factors,
                      const std::vector<double>& weights) {
  return concat_impl(factors, weights);
}

void save_factor(const std::filesystem::path& stem, const LdlFactor& factor,
                 double tolerance) {
  auto with = [&](const char* suffix) {
    auto p = stem;
    p += suffix;
    return p;
  };
  write(with(".L.mtx"), factor.left());
  write(with(".D.mtx"), factor.center());
  nlohmann::json header = {{"n", factor.rows()},
                           {"rank", factor.rank()},
                           {"tolerance", tolerance}};
  std::ofstream out(with(".json"));
  if (!out) throw Error("cannot write " + with(".json").string());
  out << header.dump(2) << '\n';
}

LdlFactor load_factor(const std::filesystem::path& stem) {
  auto with = [&](const char* suffix) {
    auto p = stem;
    p += suffix;
    return p;
  };
  std::ifstream in(with(".json"));
  if (!in) throw Error("cannot open " + with(".json").string());
  const auto header = nlohmann::json::parse(in);
  LdlFactor f(read_dense(with(".L.mtx")), read_dense(with(".D.mtx")));
  if (f.rows() != header.at("n").get<Index>() ||
      f.rank() != header.at("rank").get<Index>()) {
    throw DimensionMismatch("factor files disagree with their header");
  }
  return f;
}

}  // namespace riccati
