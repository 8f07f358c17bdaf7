#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "riccati/care_forms.hpp"
#include "riccati/coefficients.hpp"

namespace riccati {

// The three 2x2 problems of the indefinite convergence study, E = I:
//   1: A = [[2, 1], [1, -3]], B = [[1, 1], [0, 2]], C = [1 1], Q = 1,
//      R = diag(-1, 1.5)
//   2: as 1 with R = diag(-1, 2)
//   3: A as 1, B = [1; 1], C = [[1, 1], [0, 2]], Q = diag(1, -2), R = 1
std::array<CoefficientSet, 3> gen_convergence_examples();
CoefficientSet convergence_example(int which);

// Finite-difference heat equation on the unit interval (dims = 1, n = grid_n)
// or the unit square (dims = 2, n = grid_n^2) with homogeneous Dirichlet
// boundary. A is the negated stiffness matrix, E the lumped (diagonal) mass
// with heat capacity 1 + x/2. Input j heats a patch of the left part of the
// domain, output j measures a patch of the right part; collocated uses the
// input patches for both (C = B^T, p = m).
struct HeatOptions {
  Index grid_n = 10;
  int dims = 1;
  Index m = 1;
  Index p = 1;
  bool collocated = false;
};
SystemMatrices gen_heat_fdm(const HeatOptions& opts);

// Three chains of masses/3 masses each, fixed to a wall at one end and joined
// to a common coupling mass at the other. M q'' + D q' + K q = b u with
// Rayleigh damping D = damping (M + K) and the first-order realization
// E = blkdiag(K, M), A = [[0, K], [-K, -D]], B = [0; b], C = B^T (velocity
// output). Input 0 drives the coupling mass, inputs 1..3 the first mass of
// each chain.
struct TripleChainOptions {
  Index masses = 3;
  Index m = 1;
  std::array<double, 4> mass{1.0, 2.0, 3.0, 10.0};         // chains 1-3, coupling
  std::array<double, 4> stiffness{10.0, 20.0, 1.0, 50.0};  // chains 1-3, coupling
  double damping = 0.05;
};
SystemMatrices gen_triple_chain(const TripleChainOptions& opts);

// Random Hurwitz (A, E = I) with density-controlled sparse A, Gaussian B, C.
struct RandomOptions {
  Index n = 20;
  Index m = 2;
  Index p = 2;
  std::uint64_t seed = 1;
};
SystemMatrices gen_random_system(const RandomOptions& opts);

// max over sampled frequencies of ||C (i w E - A)^{-1} B + D||_2. Samples a
// log grid and, for n <= kDenseThreshold, the imaginary parts of the poles.
double hinf_norm_estimate(const SystemMatrices& sys, const DenseMatrix& d);

struct BenchmarkSpec {
  std::string name;
  std::string generator;  // convergence1..3, heat1d, heat2d, triple_chain, random
  FamilySpec family;
  HeatOptions heat;
  TripleChainOptions chain;
  RandomOptions random;
  // gamma = gamma_factor * hinf_norm_estimate when the family needs gamma and
  // none is given.
  double gamma_factor = 2.0;
};

struct GeneratedProblem {
  std::string name;
  Family family = Family::general;
  std::uint64_t seed = 0;
  CoefficientSet coeffs;
  std::optional<double> gamma;
};

GeneratedProblem generate(const BenchmarkSpec& spec);

// MatrixMarket bundle: A, E, B, C, Q, R, S (+ D when recorded) and
// manifest.json with name, n, m, p, family, seed. read_bundle accepts a
// directory without manifest (family general); E and S default to I and 0.
void write_bundle(const std::filesystem::path& dir, const GeneratedProblem& problem);
GeneratedProblem read_bundle(const std::filesystem::path& dir);

}  // namespace riccati
