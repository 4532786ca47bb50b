#include "ptchain/state_classify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ptchain/errors.hpp"

namespace ptchain {

namespace {

void check_chain(int N, int k) {
  if (N < 2 || k < 1 || 2 * k > N)
    throw ConfigError("census requires N >= 2 and 1 <= k <= N/2");
}

std::vector<PiFraction> grid(long long den) {
  std::vector<PiFraction> out;
  for (long long r = 1; r < den; ++r) out.push_back(PiFraction::reduced(r, den));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PiFraction> sorted_unique(std::vector<PiFraction> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<PiFraction> minus(const std::vector<PiFraction>& a, const std::vector<PiFraction>& b) {
  std::vector<PiFraction> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

PiFraction PiFraction::reduced(long long num, long long den) {
  if (den == 0) throw UsageError("PiFraction with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(num, den);
  return g > 1 ? PiFraction{num / g, den / g} : PiFraction{num, den};
}

double PiFraction::value() const {
  return std::numbers::pi * static_cast<double>(num) / static_cast<double>(den);
}

std::vector<PiFraction> opaque_thetas(int N, int k) {
  check_chain(N, k);
  return grid(std::gcd(N + 1, k));
}

std::vector<PiFraction> transparent_thetas(int N, int k) {
  check_chain(N, k);
  return minus(grid(std::gcd(N + 1, 2 * k)), opaque_thetas(N, k));
}

std::vector<PiFraction> opaque_thetas_by_divisors(int N, int k) {
  check_chain(N, k);
  std::vector<PiFraction> out;
  for (int M = 2; M <= N + 1; ++M) {
    if ((N + 1) % M != 0 || k % M != 0) continue;
    for (int r = 1; r < M; ++r) out.push_back(PiFraction::reduced(r, M));
  }
  return sorted_unique(std::move(out));
}

std::vector<PiFraction> transparent_thetas_by_divisors(int N, int k) {
  check_chain(N, k);
  const int inner = N - 2 * k + 1;
  std::vector<PiFraction> out;
  for (int A = 2; A <= N + 1; ++A) {
    if ((N + 1) % A != 0 || inner % A != 0 || k % A == 0) continue;
    for (int r = 1; r < A; ++r) out.push_back(PiFraction::reduced(r, A));
  }
  return minus(sorted_unique(std::move(out)), opaque_thetas_by_divisors(N, k));
}

std::pair<int, int> count_special_states(int N, int k) {
  const SpecialStateCensus c = make_census(N, k);
  return {c.n_opaque(), c.n_transparent()};
}

SpecialStateCensus make_census(int N, int k) {
  return {N, k, opaque_thetas(N, k), transparent_thetas(N, k)};
}

Classification classify_eigenpair(const EigenPair& pair, const SpecialStateCensus& census,
                                  const ClassifyOptions& opts) {
  if (pair.vector.size() != census.N)
    throw UsageError("classify_eigenpair: eigenvector length does not match census N");
  const auto matches = [&](const std::vector<PiFraction>& set) {
    return std::any_of(set.begin(), set.end(), [&](const PiFraction& f) {
      return std::abs(pair.theta - cplx(f.value(), 0.0)) <= opts.theta_tol;
    });
  };
  const double uk = std::abs(pair.vector[census.k - 1]);
  const double ukp = std::abs(pair.vector[census.N - census.k]);
  const bool both_small = uk < opts.amplitude_tol && ukp < opts.amplitude_tol;
  const bool both_large = uk > opts.amplitude_tol && ukp > opts.amplitude_tol;

  if (matches(census.opaque))
    return both_small ? Classification{StateTag::Opaque, false}
                      : Classification{StateTag::Generic, true};
  if (matches(census.transparent))
    return both_large ? Classification{StateTag::Transparent, false}
                      : Classification{StateTag::Generic, true};
  return {};
}

void classify_spectrum(Spectrum& spectrum, const SpecialStateCensus& census,
                       const ClassifyOptions& opts) {
  if (spectrum.config.N != census.N || spectrum.config.k != census.k)
    throw UsageError("classify_spectrum: census was built for a different (N, k)");
  for (EigenPair& p : spectrum.pairs) {
    const Classification c = classify_eigenpair(p, census, opts);
    p.tag = c.tag;
    p.classification_mismatch = c.mismatch;
  }
}

}  // namespace ptchain
