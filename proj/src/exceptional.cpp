#include "ptchain/exceptional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>

#include "ptchain/errors.hpp"
#include "ptchain/secular.hpp"
#include "ptchain/spectrum.hpp"

namespace ptchain {

namespace {

struct Seed {
  double eta;
  cplx energy;  // midpoint of the close pair
  double dist;
  bool flagged;
};

struct Refined {
  enum class Outcome { Point, Crossing, Rejected, Failed } outcome = Outcome::Failed;
  double eta = 0.0;
  cplx theta;
  double F = 0.0, dF = 0.0;
  bool triple = false;  // F, dF/dtheta and d2F/dtheta2 all vanish
};

double diameter(const std::vector<cplx>& E) {
  double d = 0.0;
  for (std::size_t i = 0; i < E.size(); ++i)
    for (std::size_t j = i + 1; j < E.size(); ++j) d = std::max(d, std::abs(E[i] - E[j]));
  return d;
}

// Reorders `next` so that next[j] continues branch j of `prev` (greedy by distance).
std::vector<cplx> follow_branches(const std::vector<cplx>& prev, const std::vector<cplx>& next) {
  const std::size_t n = prev.size();
  std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> cand;
  cand.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cand.push_back({std::abs(prev[i] - next[j]), {i, j}});
  std::sort(cand.begin(), cand.end());
  std::vector<cplx> out(n);
  std::vector<char> used_prev(n, 0), used_next(n, 0);
  std::size_t assigned = 0;
  for (const auto& [d, ij] : cand) {
    const auto [i, j] = ij;
    if (used_prev[i] || used_next[j]) continue;
    used_prev[i] = used_next[j] = 1;
    out[i] = next[j];
    if (++assigned == n) break;
  }
  return out;
}

std::vector<std::vector<cplx>> sweep_eigenvalues(const ChainConfig& family,
                                                 const std::vector<double>& etas, int threads) {
  std::vector<std::vector<cplx>> out(etas.size());
  unsigned nt = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  nt = std::max(1u, std::min<unsigned>(nt, static_cast<unsigned>(etas.size())));
  std::vector<std::exception_ptr> errors(nt);
  const auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < etas.size(); i += nt)
        out[i] = dense_eigenvalues(build_hamiltonian(family.with_eta(etas[i])));
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (nt == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Damped Newton on {F = 0, dF/dtheta = 0} in the complex unknowns (theta, s).
Refined refine(const Seed& seed, const ChainConfig& family, const EPSearchOptions& opts) {
  const int N = family.N, k = family.k;
  const double t = family.t;
  cplx theta = theta_from_energy(seed.energy, t);
  cplx s = (seed.eta / t) * (seed.eta / t);
  if (std::abs(std::sin(theta)) < 1e-6) return {};

  struct Eval {
    cplx F, G, dG, B, dB;
    double merit;
  };
  const auto eval = [&](cplx th, cplx sv) -> std::optional<Eval> {
    if (std::abs(std::sin(th)) <= 1e-12 || !std::isfinite(std::abs(th))) return std::nullopt;
    const SecularTerms T = secular_terms(th, N, k);
    Eval e{T.A + sv * T.B, T.dA + sv * T.dB, T.d2A + sv * T.d2B, T.B, T.dB, 0.0};
    const double sF = std::max(1.0, std::abs(T.A) + std::abs(sv) * std::abs(T.B));
    const double sG = std::max(1.0, std::abs(T.dA) + std::abs(sv) * std::abs(T.dB));
    e.merit = std::norm(e.F / sF) + std::norm(e.G / sG);
    return e;
  };

  auto cur = eval(theta, s);
  if (!cur) return {};
  for (int it = 0; it < opts.max_newton_iters; ++it) {
    const cplx det = cur->G * cur->dB - cur->B * cur->dG;
    if (det == cplx(0.0)) break;
    const cplx dth = (cur->F * cur->dB - cur->B * cur->G) / det;
    const cplx ds = (cur->G * cur->G - cur->dG * cur->F) / det;
    double lambda = 1.0;
    std::optional<Eval> trial;
    for (int h = 0; h < 30; ++h, lambda *= 0.5) {
      trial = eval(theta - lambda * dth, s - lambda * ds);
      if (trial && trial->merit < cur->merit) break;
      trial.reset();
    }
    if (!trial) break;
    theta -= lambda * dth;
    s -= lambda * ds;
    cur = trial;
    if (lambda * (std::abs(dth) + std::abs(ds)) <= 1e-15 * (1.0 + std::abs(theta) + std::abs(s)) ||
        cur->merit <= 1e-30)
      break;
  }
  if (std::abs(theta - theta_from_energy(seed.energy, t)) > 1.0) return {};

  Refined r;
  if (std::abs(s.imag()) > 1e-8 * std::max(1.0, std::abs(s)) || !(s.real() > 0.0)) {
    r.outcome = Refined::Outcome::Rejected;
    return r;
  }
  const double s_real = s.real();
  const double eta = std::abs(t) * std::sqrt(s_real);
  const double slack = 1e-9 * std::max(1.0, opts.eta_max);
  if (eta < opts.eta_min - slack || eta > opts.eta_max + slack) {
    r.outcome = Refined::Outcome::Rejected;
    return r;
  }
  // s snapped to the real axis; re-solve dF/dtheta = 0 for theta.
  for (int it = 0; it < 20; ++it) {
    const SecularTerms T = secular_terms(theta, N, k);
    const cplx d2F = T.d2F(s_real);
    if (d2F == cplx(0.0)) break;
    const cplx step = T.dF(s_real) / d2F;
    if (std::abs(step) > 1e-6) break;
    theta -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(theta))) break;
  }
  const SecularTerms T = secular_terms(theta, N, k);
  r.eta = eta;
  r.theta = theta;
  r.F = std::abs(T.F(s_real));
  r.dF = std::abs(T.dF(s_real));
  const double sF = T.scale(s_real);
  const double sG = std::max(1.0, std::abs(T.dA) + s_real * std::abs(T.dB));
  if (r.F / sF > opts.tol || r.dF / sG > opts.tol) return {};
  if (std::abs(T.B) > 1e-6 * std::max(1.0, std::abs(T.dB))) {
    r.outcome = Refined::Outcome::Point;
    return r;
  }
  // On an eta-independent root the (theta, s) Jacobian is singular; solve
  // B(theta) = 0 for theta, then dA + s dB = 0 for s, directly.
  cplx th0 = theta;
  for (int it = 0; it < 20; ++it) {
    const SecularTerms U = secular_terms(th0, N, k);
    if (U.dB == cplx(0.0)) break;
    const cplx step = U.B / U.dB;
    th0 -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(th0))) break;
  }
  const SecularTerms U = secular_terms(th0, N, k);
  const cplx s0 = U.dB != cplx(0.0) ? -U.dA / U.dB : cplx(s_real);
  if (std::abs(th0 - theta) <= 1e-6 && std::abs(s0.imag()) <= 1e-8 * std::max(1.0, std::abs(s0)) &&
      s0.real() > 0.0 && std::abs(s0.real() - s_real) <= 1e-6 * std::max(1.0, s_real)) {
    r.theta = th0;
    r.eta = std::abs(t) * std::sqrt(s0.real());
    r.F = std::abs(U.F(s0.real()));
    r.dF = std::abs(U.dF(s0.real()));
  }
  const double sr = (r.eta / t) * (r.eta / t);
  const SecularTerms V = secular_terms(r.theta, N, k);
  r.outcome = Refined::Outcome::Crossing;
  // A crossing branch that is itself at a coalescence: a triple root.
  if (std::abs(V.d2F(sr)) <= 1e-6 * std::max(1.0, std::abs(V.d2A) + sr * std::abs(V.d2B))) {
    r.outcome = Refined::Outcome::Point;
    r.triple = true;
  }
  return r;
}

bool same_point(double eta1, cplx E1, double eta2, cplx E2, double eta_tol, double e_tol) {
  return std::abs(eta1 - eta2) <= eta_tol && std::abs(E1 - E2) <= e_tol * std::max(1.0, std::abs(E1));
}

}  // namespace

EPSearchResult find_exceptional_points(const ChainConfig& family, const EPSearchOptions& opts) {
  family.validate();
  if (opts.grid < 100) throw ConfigError("find_exceptional_points: grid must be at least 100");
  if (!(opts.eta_min >= 0.0) || !(opts.eta_max > opts.eta_min) || !std::isfinite(opts.eta_max))
    throw ConfigError("find_exceptional_points: need 0 <= eta_min < eta_max");

  const int G = opts.grid;
  const double h = (opts.eta_max - opts.eta_min) / (G - 1);
  std::vector<double> etas(static_cast<std::size_t>(G));
  for (int i = 0; i < G; ++i) etas[i] = opts.eta_min + i * h;
  etas.back() = opts.eta_max;

  std::vector<std::vector<cplx>> E = sweep_eigenvalues(family, etas, opts.threads);
  for (int i = 1; i < G; ++i) E[i] = follow_branches(E[i - 1], E[i]);

  const int n = family.N;
  const std::size_t npairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  const auto pair_dist = [&](int i, std::vector<double>& row) {
    row.resize(npairs);
    std::size_t p = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) row[p++] = std::abs(E[i][a] - E[i][b]);
  };

  std::vector<Seed> seeds;
  std::vector<double> prev, cur, next;
  pair_dist(0, cur);
  if (G > 1) pair_dist(1, next);
  for (int i = 0; i < G; ++i) {
    const double diam = std::max(diameter(E[i]), 1e-300);
    std::size_t p = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b, ++p) {
        const double d = cur[p];
        const bool flagged = d < opts.flag_threshold * diam;
        if (!flagged && d >= opts.seed_threshold * diam) continue;
        const bool left_ok = i == 0 ? flagged : d <= prev[p];
        const bool right_ok = i == G - 1 ? flagged : d <= next[p];
        if (!left_ok || !right_ok) continue;
        seeds.push_back({etas[i], 0.5 * (E[i][a] + E[i][b]), d, flagged});
      }
    prev.swap(cur);
    cur.swap(next);
    if (i + 2 < G) pair_dist(i + 2, next);
  }

  EPSearchResult res;
  res.seeds = static_cast<int>(seeds.size());
  std::vector<const Seed*> failed_flagged;
  std::vector<EPRecord> triples;
  const double eta_tol = 1e-7 * std::max(1.0, opts.eta_max);
  for (const Seed& sd : seeds) {
    const Refined r = refine(sd, family, opts);
    switch (r.outcome) {
      case Refined::Outcome::Rejected: ++res.rejected_seeds; break;
      case Refined::Outcome::Failed:
        if (sd.flagged) failed_flagged.push_back(&sd);
        else ++res.rejected_seeds;
        break;
      case Refined::Outcome::Crossing: {
        cplx th = canonical_theta(r.theta);
        if (std::abs(th.imag()) < 1e-12) th = {th.real(), 0.0};
        const cplx en = 2.0 * family.t * std::cos(th);
        const bool dup = std::any_of(res.crossings.begin(), res.crossings.end(), [&](const CrossingRecord& c) {
          return same_point(c.eta, c.energy, r.eta, en, eta_tol, 1e-6);
        });
        if (!dup) res.crossings.push_back({r.eta, th, en});
        break;
      }
      case Refined::Outcome::Point: {
        EPRecord ep;
        ep.eta_c = r.eta;
        ep.theta_c = canonical_theta(r.theta);
        ep.energy_c = 2.0 * family.t * std::cos(ep.theta_c);
        ep.residuals = {r.F, r.dF};
        ep.complex_sector = std::abs(ep.energy_c.imag()) > 1e-8 * std::max(1.0, std::abs(ep.energy_c));
        if (!ep.complex_sector && std::abs(ep.theta_c.imag()) < 1e-12) {
          ep.theta_c = {ep.theta_c.real(), 0.0};
          ep.energy_c = {ep.energy_c.real(), 0.0};
        }
        if (r.triple) triples.push_back(ep);
        auto it = std::find_if(res.points.begin(), res.points.end(), [&](const EPRecord& q) {
          return same_point(q.eta_c, q.energy_c, ep.eta_c, ep.energy_c, eta_tol, 1e-6);
        });
        if (it == res.points.end()) res.points.push_back(ep);
        else if (ep.residuals.F + ep.residuals.dF < it->residuals.F + it->residuals.dF) *it = ep;
        break;
      }
    }
  }

  // Newton lands on spurious pair solutions around a triple root, where the
  // Jacobian is singular; the triple root itself is the only record kept.
  std::erase_if(res.points, [&](const EPRecord& q) {
    return std::any_of(triples.begin(), triples.end(), [&](const EPRecord& tr) {
      return q.energy_c != tr.energy_c && std::abs(q.eta_c - tr.eta_c) <= 1e-6 * std::max(1.0, tr.eta_c) &&
             std::abs(q.energy_c - tr.energy_c) <= 1e-3 * std::max(1.0, std::abs(tr.energy_c));
    });
  });

  // Flagged seeds that failed are reported unless a refined record explains them.
  const double grid_tol = 2.0 * h;
  for (const Seed* sd : failed_flagged) {
    const double e_tol = std::max(4.0 * sd->dist, 1e-6);
    const auto near = [&](double eta, cplx en) {
      return std::abs(eta - sd->eta) <= grid_tol && std::abs(en - sd->energy) <= e_tol;
    };
    const bool explained =
        std::any_of(res.points.begin(), res.points.end(), [&](const EPRecord& q) { return near(q.eta_c, q.energy_c); }) ||
        std::any_of(res.crossings.begin(), res.crossings.end(), [&](const CrossingRecord& c) { return near(c.eta, c.energy); });
    if (explained) continue;
    EPRecord ep;
    ep.eta_c = sd->eta;
    ep.theta_c = theta_from_energy(sd->energy, family.t);
    ep.energy_c = sd->energy;
    ep.unresolved = true;
    ep.complex_sector = std::abs(ep.energy_c.imag()) > 1e-8 * std::max(1.0, std::abs(ep.energy_c));
    if (std::abs(std::sin(ep.theta_c)) > 1e-14) {
      const ChainConfig at = family.with_eta(ep.eta_c);
      ep.residuals = {std::abs(secular_residual(ep.theta_c, at)), std::abs(secular_dtheta(ep.theta_c, at))};
    }
    res.points.push_back(ep);
  }

  for (EPRecord& ep : res.points) {
    if (ep.unresolved) continue;
    const OrderEstimate est = estimate_ep_order(family, ep);
    ep.order = est.order;
    ep.log_slope = est.log_slope;
    ep.order_ambiguous = est.ambiguous;
  }

  std::sort(res.points.begin(), res.points.end(), [](const EPRecord& a, const EPRecord& b) {
    if (a.eta_c != b.eta_c) return a.eta_c < b.eta_c;
    if (a.theta_c.real() != b.theta_c.real()) return a.theta_c.real() < b.theta_c.real();
    return a.theta_c.imag() < b.theta_c.imag();
  });
  std::sort(res.crossings.begin(), res.crossings.end(), [](const CrossingRecord& a, const CrossingRecord& b) {
    if (a.eta != b.eta) return a.eta < b.eta;
    return a.theta.real() < b.theta.real();
  });
  return res;
}

OrderEstimate estimate_ep_order(const ChainConfig& family, const EPRecord& ep) {
  family.validate();
  const double scale = std::max(1.0, std::abs(ep.energy_c));
  const std::vector<cplx> at = dense_eigenvalues(build_hamiltonian(family.with_eta(ep.eta_c)));
  OrderEstimate out;
  out.count = static_cast<int>(std::count_if(at.begin(), at.end(), [&](const cplx& e) {
    return std::abs(e - ep.energy_c) <= 1e-4 * scale;
  }));
  const int m = std::max(2, out.count);

  const double deltas[] = {1e-6, 1e-5, 1e-4};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double d : deltas) {
    std::vector<cplx> ev = dense_eigenvalues(build_hamiltonian(family.with_eta(ep.eta_c + d)));
    std::vector<double> dist(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) dist[i] = std::abs(ev[i] - ep.energy_c);
    std::sort(dist.begin(), dist.end());
    const double spread = std::max(dist[static_cast<std::size_t>(std::min<int>(m, static_cast<int>(dist.size())) - 1)],
                                   std::numeric_limits<double>::min());
    const double x = std::log(d), y = std::log(spread);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nd = 3.0;
  out.log_slope = (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
  if (out.count >= 2) {
    out.order = out.count;
  } else {
    out.order = out.log_slope > 0.0 ? std::max(2, static_cast<int>(std::lround(1.0 / out.log_slope))) : 2;
  }
  out.ambiguous = std::abs(out.log_slope - 1.0 / out.order) > 0.25;
  return out;
}

std::pair<cplx, cplx> ep_perturbation_theta(int N, double eta) {
  if (N < 2 || N % 2 != 0) throw DomainError("ep_perturbation_theta: requires even N");
  if (!(std::abs(eta - 1.0) <= 0.5)) throw DomainError("ep_perturbation_theta: requires |eta - 1| <= 0.5");
  const cplx r = std::sqrt(cplx((eta * eta - 1.0) / (2.0 * N), 0.0));
  const cplx half_pi(std::numbers::pi / 2.0, 0.0);
  const cplx i(0.0, 1.0);
  return {half_pi + i * r, half_pi - i * r};
}

std::pair<cplx, cplx> ep_perturbation_energy(int N, double eta) {
  const cplx r = std::sqrt(cplx((eta * eta - 1.0) / (2.0 * N), 0.0));
  const cplx i(0.0, 1.0);
  ep_perturbation_theta(N, eta);  // domain checks
  return {-2.0 * i * std::sinh(r), 2.0 * i * std::sinh(r)};
}

std::pair<cplx, cplx> asymptotic_imaginary_energies(double eta) {
  if (!(eta >= 5.0)) throw DomainError("asymptotic_imaginary_energies: requires eta >= 5");
  const double g = eta - 1.0 / eta;
  return {cplx(0.0, g), cplx(0.0, -g)};
}

AsymptoticThetas asymptotic_real_thetas(int N, int k) {
  ChainConfig{N, k}.validate();
  AsymptoticThetas out;
  const int inner = N - 2 * k + 1;
  for (int r = 1; r < inner; ++r) out.inner.push_back(PiFraction::reduced(r, inner));
  for (int r = 1; r < k; ++r) out.double_roots.push_back(PiFraction::reduced(r, k));
  return out;
}

std::vector<AsymptoticProbe> asymptotic_probe(const ChainConfig& family, const std::vector<double>& etas) {
  family.validate();
  std::vector<AsymptoticProbe> out;
  for (double eta : etas) {
    const std::vector<cplx> ev = dense_eigenvalues(build_hamiltonian(family.with_eta(eta)));
    const auto [lo, hi] = std::minmax_element(ev.begin(), ev.end(), [](const cplx& a, const cplx& b) {
      return a.imag() < b.imag();
    });
    AsymptoticProbe p;
    p.eta = eta;
    p.predicted = family.t * asymptotic_imaginary_energies(eta / family.t).first;
    p.observed_upper = *hi;
    p.observed_lower = *lo;
    const double mag = std::abs(p.predicted);
    p.relative_error = std::max(std::abs(*hi - p.predicted), std::abs(*lo - std::conj(p.predicted))) / mag;
    out.push_back(p);
  }
  return out;
}

}  // namespace ptchain
