#include "riccati/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "riccati/errors.hpp"

namespace riccati {

namespace {

struct Header {
  bool coordinate = true;
  bool symmetric = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MatrixMarketError("empty input");
  std::istringstream ss(line);
  std::string banner, object, format, field, symmetry;
  ss >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") {
    throw MatrixMarketError("missing %%MatrixMarket matrix banner");
  }
  Header h;
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format == "coordinate") {
    h.coordinate = true;
  } else if (format == "array") {
    h.coordinate = false;
  } else {
    throw MatrixMarketError("unknown format '" + format + "'");
  }
  if (field != "real" && field != "integer" && field != "double") {
    throw MatrixMarketError("unsupported field '" + field + "'");
  }
  if (symmetry == "general") {
    h.symmetric = false;
  } else if (symmetry == "symmetric") {
    h.symmetric = true;
  } else {
    throw MatrixMarketError("unsupported symmetry '" + symmetry + "'");
  }
  return h;
}

// Next line that is neither blank nor a comment.
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    return true;
  }
  return false;
}

double parse_value(std::istringstream& ss) {
  double v;
  if (!(ss >> v)) throw MatrixMarketError("malformed numeric entry");
  return v;
}

std::vector<Eigen::Triplet<double>> read_entries(std::istream& in,
                                                 const Header& h, Index& rows,
                                                 Index& cols) {
  std::string line;
  if (!next_data_line(in, line)) throw MatrixMarketError("missing size line");
  std::istringstream size_line(line);
  std::vector<Eigen::Triplet<double>> trips;
  if (h.coordinate) {
    long long r, c, nnz;
    if (!(size_line >> r >> c >> nnz) || r < 0 || c < 0 || nnz < 0) {
      throw MatrixMarketError("malformed size line");
    }
    rows = r;
    cols = c;
    trips.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
      if (!next_data_line(in, line)) {
        throw MatrixMarketError("fewer entries than declared");
      }
      std::istringstream ss(line);
      long long i, j;
      if (!(ss >> i >> j) || i < 1 || j < 1 || i > r || j > c) {
        throw MatrixMarketError("entry index out of range");
      }
      const double v = parse_value(ss);
      trips.emplace_back(i - 1, j - 1, v);
      if (h.symmetric && i != j) trips.emplace_back(j - 1, i - 1, v);
    }
  } else {
    long long r, c;
    if (!(size_line >> r >> c) || r < 0 || c < 0) {
      throw MatrixMarketError("malformed size line");
    }
    rows = r;
    cols = c;
    for (Index j = 0; j < cols; ++j) {
      for (Index i = h.symmetric ? j : 0; i < rows; ++i) {
        if (!next_data_line(in, line)) {
          throw MatrixMarketError("fewer entries than declared");
        }
        std::istringstream ss(line);
        const double v = parse_value(ss);
        trips.emplace_back(i, j, v);
        if (h.symmetric && i != j) trips.emplace_back(j, i, v);
      }
    }
  }
  for (const auto& t : trips) {
    if (!std::isfinite(t.value())) {
      throw MatrixMarketError("non-finite entry");
    }
  }
  return trips;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MatrixMarketError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError("cannot write " + path.string());
  return out;
}

}  // namespace

SparseMatrix read_sparse(std::istream& in) {
  const Header h = read_header(in);
  Index rows = 0;
  Index cols = 0;
  auto trips = read_entries(in, h, rows, cols);
  SparseMatrix out(rows, cols);
  // Duplicate coordinates are summed.
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

DenseMatrix read_dense(std::istream& in) {
  const Header h = read_header(in);
  Index rows = 0;
  Index cols = 0;
  auto trips = read_entries(in, h, rows, cols);
  DenseMatrix out = DenseMatrix::Zero(rows, cols);
  for (const auto& t : trips) out(t.row(), t.col()) += t.value();
  return out;
}

SparseMatrix read_sparse(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_sparse(in);
}

DenseMatrix read_dense(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dense(in);
}

void write(std::ostream& out, const DenseMatrix& mat) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "%%MatrixMarket matrix array real general\n";
  out << mat.rows() << ' ' << mat.cols() << '\n';
  for (Index j = 0; j < mat.cols(); ++j) {
    for (Index i = 0; i < mat.rows(); ++i) out << mat(i, j) << '\n';
  }
  out.precision(old);
}

void write(std::ostream& out, const SparseMatrix& mat) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << mat.rows() << ' ' << mat.cols() << ' ' << mat.nonZeros() << '\n';
  for (Index j = 0; j < mat.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(mat, j); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
  out.precision(old);
}

void write(const std::filesystem::path& path, const DenseMatrix& mat) {
  auto out = open_out(path);
  write(out, mat);
}

void write(const std::filesystem::path& path, const SparseMatrix& mat) {
  auto out = open_out(path);
  write(out, mat);
}

}  // namespace riccati
