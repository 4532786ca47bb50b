#pragma once

#include <compare>
#include <utility>
#include <vector>

#include "ptchain/spectrum.hpp"

namespace ptchain {

/// theta = (num / den) * pi, kept exact and in lowest terms.
struct PiFraction {
  long long num = 0;
  long long den = 1;

  static PiFraction reduced(long long num, long long den);
  double value() const;  // radians

  friend bool operator==(const PiFraction&, const PiFraction&) = default;
  friend std::strong_ordering operator<=>(const PiFraction& x, const PiFraction& y) {
    return x.num * y.den <=> y.num * x.den;
  }
};

/// The eta-independent real pseudo-momenta of a chain configuration.
struct SpecialStateCensus {
  int N = 0;
  int k = 0;
  std::vector<PiFraction> opaque;       // sorted
  std::vector<PiFraction> transparent;  // sorted, disjoint from opaque

  int n_opaque() const { return static_cast<int>(opaque.size()); }
  int n_transparent() const { return static_cast<int>(transparent.size()); }
};

/// {r pi / g : r = 1..g-1} with g = gcd(N+1, k).
std::vector<PiFraction> opaque_thetas(int N, int k);

/// {r pi / h : r = 1..h-1} with h = gcd(N+1, 2k), minus the opaque set.
std::vector<PiFraction> transparent_thetas(int N, int k);

/// Reference construction: union over every M > 1 dividing both N+1 and k
/// of {r pi / M : r = 1..M-1}.
std::vector<PiFraction> opaque_thetas_by_divisors(int N, int k);

/// Reference construction: union over every A > 1 dividing N+1 and N-2k+1
/// but not k of {r pi / A}, minus the opaque set.
std::vector<PiFraction> transparent_thetas_by_divisors(int N, int k);

/// (n_opaque, n_transparent).
std::pair<int, int> count_special_states(int N, int k);

SpecialStateCensus make_census(int N, int k);

struct ClassifyOptions {
  double theta_tol = 1e-8;      // absolute, on theta
  double amplitude_tol = 1e-9;  // on |u_k|, |u_k'| of the unit-norm vector
};

struct Classification {
  StateTag tag = StateTag::Generic;
  /// theta matched a census fraction but the contact amplitudes disagreed
  /// with the expected opaque/transparent pattern.
  bool mismatch = false;
};

/// Throws UsageError if the eigenvector length differs from census.N.
Classification classify_eigenpair(const EigenPair& pair, const SpecialStateCensus& census,
                                  const ClassifyOptions& opts = {});

/// Tags every pair in place. Throws UsageError if the census was built for
/// a different (N, k).
void classify_spectrum(Spectrum& spectrum, const SpecialStateCensus& census,
                       const ClassifyOptions& opts = {});

}  // namespace ptchain
