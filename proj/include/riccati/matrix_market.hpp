#pragma once

#include <filesystem>
#include <iosfwd>

#include "riccati/linalg.hpp"

namespace riccati {

// MatrixMarket I/O for real matrices. Reading accepts the coordinate and
// array formats with general or symmetric symmetry (integer fields are
// promoted to real). Writing uses array format for dense matrices and
// coordinate format for sparse ones.
SparseMatrix read_sparse(std::istream& in);
DenseMatrix read_dense(std::istream& in);
SparseMatrix read_sparse(const std::filesystem::path& path);
DenseMatrix read_dense(const std::filesystem::path& path);

void write(std::ostream& out, const DenseMatrix& mat);
void write(std::ostream& out, const SparseMatrix& mat);
void write(const std::filesystem::path& path, const DenseMatrix& mat);
void write(const std::filesystem::path& path, const SparseMatrix& mat);

}  // namespace riccati
