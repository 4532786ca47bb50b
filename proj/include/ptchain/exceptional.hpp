#pragma once

#include <utility>
#include <vector>

#include "ptchain/chain_model.hpp"
#include "ptchain/state_classify.hpp"

namespace ptchain {

/// An exceptional point: F(theta, s) = 0 and dF/dtheta(theta, s) = 0 with
/// dF/ds = B(theta) != 0, where s = (eta / t)^2; or a triple root
/// (F = dF/dtheta = d2F/dtheta2 = 0) where a coalescing pair meets an
/// eta-independent state.
struct EPRecord {
  double eta_c = 0.0;
  cplx theta_c;
  cplx energy_c;
  int order = 2;
  struct Residuals {
    double F = 0.0;   // |F(theta_c, s_c)|
    double dF = 0.0;  // |dF/dtheta(theta_c, s_c)|
  } residuals;
  /// The coalescing eigenvalues are already complex (a second coalescence
  /// inside the broken phase).
  bool complex_sector = false;
  /// Newton did not converge from a strongly flagged seed; eta_c / theta_c
  /// hold the best grid estimate.
  bool unresolved = false;
  /// Eigenvalue count at eta_c and the log-slope of the splitting disagree.
  bool order_ambiguous = false;
  double log_slope = 0.0;
};

/// A point with F = dF/dtheta = 0 where B also vanishes: an eta-independent
/// root crossed by another branch. The two eigenvalues pass through each other
/// linearly in eta, without square-root branching. H is unreduced tridiagonal,
/// so it still carries a 2x2 Jordan block at the crossing.
/// If d2F/dtheta2 vanishes as well, the point is a triple root and is
/// reported as an EPRecord of order 3 instead.
struct CrossingRecord {
  double eta = 0.0;
  cplx theta;
  cplx energy;
};

struct EPSearchOptions {
  double eta_min = 0.0;
  double eta_max = 5.0;
  int grid = 2000;
  /// Local minima of a tracked pair distance below seed_threshold * diameter
  /// are refined. Refinement failure is silent for these seeds.
  double seed_threshold = 0.05;
  /// Seeds below flag_threshold * diameter that fail to refine are kept as
  /// unresolved records.
  double flag_threshold = 1e-3;
  double tol = 1e-9;
  int max_newton_iters = 100;
  int threads = 0;  // 0: hardware concurrency
};

struct EPSearchResult {
  std::vector<EPRecord> points;  // sorted by (eta_c, Re theta_c, Im theta_c)
  std::vector<CrossingRecord> crossings;
  int seeds = 0;
  int rejected_seeds = 0;  // refined to a non-physical (complex or out-of-range) eta
};

/// Sweeps eta over [eta_min, eta_max] on `grid` points, tracks eigenvalue
/// branches, and refines pair-distance minima with a damped Newton solve of
/// {F = 0, dF/dtheta = 0} in (theta, s). cfg.eta is ignored.
EPSearchResult find_exceptional_points(const ChainConfig& family, const EPSearchOptions& opts = {});

struct OrderEstimate {
  int order = 2;
  int count = 0;          // dense eigenvalues within the collapse radius at eta_c
  double log_slope = 0.0; // d log|E - E_c| / d log(eta - eta_c)
  bool ambiguous = false; // |log_slope - 1/order| > 0.25
};

OrderEstimate estimate_ep_order(const ChainConfig& family, const EPRecord& ep);

/// theta_pm = pi/2 +- i sqrt((eta^2 - 1) / (2N)) for the end-to-end chain
/// (k = 1, even N, |eta - 1| <= 0.5, t = 1). Real and symmetric about pi/2 for eta < 1.
std::pair<cplx, cplx> ep_perturbation_theta(int N, double eta);

/// E_pm = -+ 2i sinh(sqrt((eta^2 - 1) / (2N))), i.e. 2 cos(theta_pm).
std::pair<cplx, cplx> ep_perturbation_energy(int N, double eta);

/// (+i (eta - 1/eta), -i (eta - 1/eta)) for eta >= 5, with t = 1.
std::pair<cplx, cplx> asymptotic_imaginary_energies(double eta);

struct AsymptoticThetas {
  std::vector<PiFraction> inner;        // r pi / (N - 2k + 1), r = 1..N-2k
  std::vector<PiFraction> double_roots; // r pi / k, r = 1..k-1, each twice
  int state_count() const {
    return static_cast<int>(inner.size() + 2 * double_roots.size()) + 2;
  }
};

/// Real pseudo-momenta of the eta -> infinity spectrum; together with the two
/// imaginary states they account for all N eigenvalues.
AsymptoticThetas asymptotic_real_thetas(int N, int k);

struct AsymptoticProbe {
  double eta = 0.0;
  cplx predicted;           // +i (eta - 1/eta)
  cplx observed_upper;      // eigenvalue with the largest Im E
  cplx observed_lower;      // eigenvalue with the smallest Im E
  double relative_error = 0.0;  // worst of the two, relative to |predicted|
};

/// Compares the dense spectrum with asymptotic_imaginary_energies at each eta.
/// The prediction is scaled to the hopping: t * i (eta/t - t/eta).
std::vector<AsymptoticProbe> asymptotic_probe(const ChainConfig& family,
                                              const std::vector<double>& etas = {10.0, 50.0, 100.0});

}  // namespace ptchain
