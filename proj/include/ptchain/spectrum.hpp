#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "ptchain/chain_model.hpp"

namespace ptchain {

enum class StateTag { Generic, Opaque, Transparent };

std::string_view to_string(StateTag tag);

struct SolverOptions {
  /// Target for |F| / max(1, |A| + s|B|) during Newton polishing.
  double secular_tol = 1e-11;
  /// Maximum accepted ||H u - E u|| / ||u|| for the closed-form eigenvector.
  double eigen_tol = 1e-9;
  int max_newton_iters = 50;
  /// Seeds closer than this (in theta) are solved jointly as a coalescing pair.
  double ep_guard_radius = 1e-6;
};

struct EigenPair {
  cplx theta;
  cplx energy;
  ComplexVector vector;
  StateTag tag = StateTag::Generic;
  struct Residuals {
    double secular = 0.0;  // scaled, see SolverOptions::secular_tol
    double eigen = 0.0;
  } residuals;

  bool polished = true;           // false: Newton diverged, dense value kept
  bool near_coalescence = false;  // solved jointly with a partner inside the guard radius
  bool analytic_vector = true;    // false: closed form failed eigen_tol, dense vector kept
  bool classification_mismatch = false;
};

struct Spectrum {
  ChainConfig config;
  /// Sorted by (Re E, Im E).
  std::vector<EigenPair> pairs;
  /// Index pairs (i, j), i < j, with E_i ~ conj(E_j) and Im E != 0.
  std::vector<std::pair<int, int>> conjugate_pairing;
};

struct DenseEigenpair {
  cplx value;
  ComplexVector vector;
  double residual;  // ||H v - lambda v|| / ||v||
};

/// Full non-Hermitian eigendecomposition (complex Schur). Vectors are unit
/// norm but not orthogonal. Throws NumericalError if the QR iteration fails.
std::vector<DenseEigenpair> dense_eigensolve(const ComplexMatrix& H);

/// Eigenvalues only.
std::vector<cplx> dense_eigenvalues(const ComplexMatrix& H);

/// Spectrum from dense seeds polished on the secular equation, with
/// closed-form eigenvectors, conjugate pairing and opaque/transparent tags.
Spectrum solve_spectrum(const ChainConfig& cfg, const SolverOptions& opts = {});

/// Bottleneck distance between two equally sized multisets: the smallest
/// achievable maximum |a_i - b_pi(i)| over all one-to-one matchings pi.
double multiset_distance(const std::vector<cplx>& a, const std::vector<cplx>& b);

}  // namespace ptchain
