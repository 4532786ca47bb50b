#include "ptchain/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <Eigen/Eigenvalues>

#include "ptchain/errors.hpp"
#include "ptchain/secular.hpp"
#include "ptchain/state_classify.hpp"

namespace ptchain {

std::string_view to_string(StateTag tag) {
  switch (tag) {
    case StateTag::Opaque: return "Opaque";
    case StateTag::Transparent: return "Transparent";
    case StateTag::Generic: break;
  }
  return "Generic";
}

std::vector<DenseEigenpair> dense_eigensolve(const ComplexMatrix& H) {
  if (H.rows() != H.cols()) throw UsageError("dense_eigensolve: matrix must be square");
  Eigen::ComplexEigenSolver<ComplexMatrix> es(H, true);
  if (es.info() != Eigen::Success)
    throw NumericalError("dense_eigensolve: complex Schur iteration did not converge (n=" +
                         std::to_string(H.rows()) + ")");
  std::vector<DenseEigenpair> out;
  out.reserve(static_cast<std::size_t>(H.rows()));
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    ComplexVector v = es.eigenvectors().col(i);
    v.normalize();
    const cplx lambda = es.eigenvalues()[i];
    out.push_back({lambda, v, (H * v - lambda * v).norm()});
  }
  return out;
}

std::vector<cplx> dense_eigenvalues(const ComplexMatrix& H) {
  if (H.rows() != H.cols()) throw UsageError("dense_eigenvalues: matrix must be square");
  Eigen::ComplexEigenSolver<ComplexMatrix> es(H, false);
  if (es.info() != Eigen::Success)
    throw NumericalError("dense_eigenvalues: complex Schur iteration did not converge");
  return {es.eigenvalues().begin(), es.eigenvalues().end()};
}

namespace {

struct Polished {
  cplx theta;
  bool ok;
};

constexpr double kStepFloor = 4.0 * std::numeric_limits<double>::epsilon();

Polished newton_polish(cplx seed, const ChainConfig& cfg, double s, double radius,
                       const SolverOptions& opts) {
  cplx theta = seed;
  for (int it = 0; it < opts.max_newton_iters; ++it) {
    const SecularTerms T = secular_terms(theta, cfg.N, cfg.k);
    const cplx F = T.F(s), dF = T.dF(s);
    if (std::abs(F) <= opts.secular_tol * T.scale(s)) return {theta, true};
    if (dF == cplx(0.0)) break;
    const cplx step = F / dF;
    theta -= step;
    if (!std::isfinite(std::abs(theta)) || std::abs(theta - seed) > radius) return {seed, false};
    if (std::abs(step) <= kStepFloor * std::max(1.0, std::abs(theta))) return {theta, true};
  }
  return {seed, false};
}

// Two roots closer than the guard radius: Newton on F' locates the midpoint,
// then the local quadratic model gives both roots at once.
std::pair<Polished, Polished> pair_polish(cplx a, cplx b, const ChainConfig& cfg, double s,
                                          const SolverOptions& opts) {
  const double radius = std::max(10.0 * opts.ep_guard_radius, 10.0 * std::abs(a - b));
  const cplx start = 0.5 * (a + b);
  cplx mid = start;
  for (int it = 0; it < opts.max_newton_iters; ++it) {
    const SecularTerms T = secular_terms(mid, cfg.N, cfg.k);
    const cplx d2F = T.d2F(s);
    if (d2F == cplx(0.0)) return {{a, false}, {b, false}};
    const cplx step = T.dF(s) / d2F;
    mid -= step;
    if (!std::isfinite(std::abs(mid)) || std::abs(mid - start) > radius)
      return {{a, false}, {b, false}};
    if (std::abs(step) <= kStepFloor * std::max(1.0, std::abs(mid))) break;
  }
  const SecularTerms T = secular_terms(mid, cfg.N, cfg.k);
  const cplx F = T.F(s), dF = T.dF(s), d2F = T.d2F(s);
  // F at the critical point is -d2F delta^2 / 8 for roots delta apart; at the
  // rounding floor the split is not resolvable and the root is taken as double.
  if (std::abs(F) <= kStepFloor * T.scale(s) && std::abs(dF) <= kStepFloor * std::abs(d2F))
    return {{mid, true}, {mid, true}};
  const cplx disc = std::sqrt(dF * dF - 2.0 * F * d2F);
  cplx r1 = mid + (-dF + disc) / d2F;
  cplx r2 = mid + (-dF - disc) / d2F;
  if (std::abs(r1 - a) + std::abs(r2 - b) > std::abs(r1 - b) + std::abs(r2 - a)) std::swap(r1, r2);
  return {{r1, true}, {r2, true}};
}

// Three seeds inside kTripleRadius whose centroid also annihilates dF/dtheta
// sit on an exact triple root; double precision resolves such roots only to
// ~eps^(1/3), so the centroid (refined by Newton on d2F/dtheta2) is used for
// all three.
constexpr double kTripleRadius = 1e-4;

std::optional<cplx> triple_root(const std::vector<cplx>& energies, const ChainConfig& cfg, double s) {
  cplx mean = 0.0;
  for (const cplx& e : energies) mean += e;
  mean /= static_cast<double>(energies.size());
  cplx theta = theta_from_energy(mean, cfg.t);
  if (std::abs(std::sin(theta)) <= 1e-8) return std::nullopt;
  const cplx start = theta;
  for (int it = 0; it < 8; ++it) {
    constexpr double h = 1e-4;
    const cplx d2 = secular_terms(theta, cfg.N, cfg.k).d2F(s);
    const cplx d3 = (secular_terms(theta + h, cfg.N, cfg.k).d2F(s) -
                     secular_terms(theta - h, cfg.N, cfg.k).d2F(s)) / (2.0 * h);
    if (d3 == cplx(0.0)) break;
    const cplx step = d2 / d3;
    theta -= step;
    if (std::abs(theta - start) > kTripleRadius) return std::nullopt;
    if (std::abs(step) <= kStepFloor) break;
  }
  const SecularTerms T = secular_terms(theta, cfg.N, cfg.k);
  const double scale1 = std::max(1.0, std::abs(T.dA) + s * std::abs(T.dB));
  if (std::abs(T.F(s)) / T.scale(s) > 1e-10 || std::abs(T.dF(s)) / scale1 > 1e-8) return std::nullopt;
  return theta;
}

void pair_conjugates(Spectrum& spec) {
  const auto& P = spec.pairs;
  const int n = static_cast<int>(P.size());
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    const cplx E = P[i].energy;
    if (used[i] || std::abs(E.imag()) <= 1e-9 * std::max(1.0, std::abs(E))) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i || used[j]) continue;
      const double d = std::abs(P[j].energy - std::conj(E));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best < 0 || best_d > 1e-6 * std::max(1.0, std::abs(E))) continue;
    used[i] = used[best] = true;
    spec.conjugate_pairing.emplace_back(std::min(i, best), std::max(i, best));
  }
  std::sort(spec.conjugate_pairing.begin(), spec.conjugate_pairing.end());
}

}  // namespace

Spectrum solve_spectrum(const ChainConfig& cfg, const SolverOptions& opts) {
  cfg.validate();
  const ComplexMatrix H = build_hamiltonian(cfg);
  const std::vector<DenseEigenpair> dense = dense_eigensolve(H);
  const int n = cfg.N;
  const double s = cfg.reduced_eta() * cfg.reduced_eta();

  std::vector<cplx> seeds(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) seeds[i] = theta_from_energy(dense[i].value, cfg.t);

  std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> nearest_idx(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::abs(seeds[i] - seeds[j]) < nearest[i]) {
        nearest[i] = std::abs(seeds[i] - seeds[j]);
        nearest_idx[i] = j;
      }

  std::vector<Polished> polished(static_cast<std::size_t>(n), Polished{cplx{}, false});
  std::vector<bool> joint(static_cast<std::size_t>(n), false);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    std::vector<int> members;
    for (int m = 0; m < n; ++m)
      if (std::abs(seeds[m] - seeds[i]) < kTripleRadius) members.push_back(m);
    if (members.size() != 3 || members.front() != i) continue;
    std::vector<cplx> cluster;
    for (int m : members) cluster.push_back(dense[m].value);
    if (const auto root = triple_root(cluster, cfg, s)) {
      for (int m : members) {
        polished[m] = {*root, true};
        joint[m] = done[m] = true;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (done[i]) continue;
    // Trivial points cannot be polished on the secular equation.
    if (std::abs(std::sin(seeds[i])) <= 1e-12) {
      polished[i] = {seeds[i], false};
      done[i] = true;
      continue;
    }
    const int j = nearest_idx[i];
    if (j >= 0 && nearest[i] < opts.ep_guard_radius) {
      const bool isolated_pair = nearest_idx[j] == i;
      int cluster = 0;
      for (int m = 0; m < n; ++m)
        if (std::abs(seeds[m] - seeds[i]) < opts.ep_guard_radius) ++cluster;
      joint[i] = true;
      if (isolated_pair && cluster == 2 && !done[j]) {
        auto [pi, pj] = pair_polish(seeds[i], seeds[j], cfg, s, opts);
        polished[i] = pi;
        polished[j] = pj;
        joint[j] = true;
        done[j] = true;
      } else {
        // Higher-order coalescence: keep the dense value.
        polished[i] = {seeds[i], false};
      }
      done[i] = true;
      continue;
    }
    const double radius = std::min(0.1, std::max(1e-10, 0.5 * nearest[i]));
    polished[i] = newton_polish(seeds[i], cfg, s, radius, opts);
    done[i] = true;
  }

  // Two seeds polished onto the same root: keep the one that moved less.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (joint[i] || joint[j] || !polished[i].ok || !polished[j].ok) continue;
      if (std::abs(polished[i].theta - polished[j].theta) > 1e-10 * std::max(1.0, std::abs(seeds[i])))
        continue;
      const int worse = std::abs(polished[i].theta - seeds[i]) > std::abs(polished[j].theta - seeds[j]) ? i : j;
      polished[worse] = {seeds[worse], false};
    }

  Spectrum spec;
  spec.config = cfg;
  spec.pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    EigenPair p;
    p.theta = canonical_theta(polished[i].theta);
    p.energy = 2.0 * cfg.t * std::cos(p.theta);
    p.polished = polished[i].ok;
    p.near_coalescence = joint[i];
    p.residuals.secular = std::abs(std::sin(p.theta)) > 1e-14
                              ? scaled_secular_residual(p.theta, cfg)
                              : std::numeric_limits<double>::infinity();

    ComplexVector dense_vec = normalize_gauge(dense[i].vector);
    const double dense_res = (H * dense_vec - p.energy * dense_vec).norm();
    bool have_analytic = false;
    try {
      p.vector = eigenvector_analytic(p.theta, cfg);
      p.residuals.eigen = (H * p.vector - p.energy * p.vector).norm();
      have_analytic = p.residuals.eigen <= opts.eigen_tol || p.residuals.eigen <= dense_res;
    } catch (const DomainError&) {
    } catch (const NumericalError&) {
    }
    if (!have_analytic) {
      p.vector = std::move(dense_vec);
      p.residuals.eigen = dense_res;
      p.analytic_vector = false;
    }
    spec.pairs.push_back(std::move(p));
  }

  std::sort(spec.pairs.begin(), spec.pairs.end(), [](const EigenPair& x, const EigenPair& y) {
    if (x.energy.real() != y.energy.real()) return x.energy.real() < y.energy.real();
    return x.energy.imag() < y.energy.imag();
  });
  pair_conjugates(spec);
  classify_spectrum(spec, make_census(cfg.N, cfg.k));
  return spec;
}

double multiset_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) throw UsageError("multiset_distance: sizes differ");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  std::vector<double> cand;
  cand.reserve(n * n);
  for (const cplx& x : a)
    for (const cplx& y : b) cand.push_back(std::abs(x - y));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  // Perfect matching using only edges of length <= limit (Kuhn's algorithm).
  const auto perfect = [&](double limit) {
    std::vector<int> match_b(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<char> seen(n, 0);
      const auto augment = [&](auto&& self, std::size_t u) -> bool {
        for (std::size_t v = 0; v < n; ++v) {
          if (seen[v] || std::abs(a[u] - b[v]) > limit) continue;
          seen[v] = 1;
          if (match_b[v] < 0 || self(self, static_cast<std::size_t>(match_b[v]))) {
            match_b[v] = static_cast<int>(u);
            return true;
          }
        }
        return false;
      };
      if (!augment(augment, i)) return false;
    }
    return true;
  };

  std::size_t lo = 0, hi = cand.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect(cand[mid])) hi = mid;
    else lo = mid + 1;
  }
  return cand[lo];
}

}  // namespace ptchain
