#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "ptchain/errors.hpp"
#include "ptchain/secular.hpp"
#include "ptchain/spectrum.hpp"

using namespace ptchain;
using std::numbers::pi;

namespace {

cplx fd_theta(const std::function<cplx(cplx)>& f, cplx theta, double h) {
  return (f(theta + h) - f(theta - h)) / (2.0 * h);
}

// Site amplitudes from the three-term recurrence in extended precision,
// started from the left end (u_1 = 1) or the right end (u_N = 1).
std::vector<oracle::lcplx> recurrence_vector(const ChainConfig& cfg, cplx E, bool from_left) {
  using L = oracle::lcplx;
  const int N = cfg.N;
  std::vector<L> diag(N, 0.0L);
  diag[cfg.k - 1] = L(0.0L, cfg.eta);
  diag[cfg.N - cfg.k] = L(0.0L, -cfg.eta);
  std::vector<L> u(N);
  const L e(E.real(), E.imag());
  const long double t = cfg.t;
  if (from_left) {
    u[0] = 1.0L;
    u[1] = (e - diag[0]) * u[0] / t;
    for (int j = 1; j + 1 < N; ++j) u[j + 1] = ((e - diag[j]) * u[j] - t * u[j - 1]) / t;
  } else {
    u[N - 1] = 1.0L;
    u[N - 2] = (e - diag[N - 1]) * u[N - 1] / t;
    for (int j = N - 2; j >= 1; --j) u[j - 1] = ((e - diag[j]) * u[j] - t * u[j + 1]) / t;
  }
  return u;
}

}  // namespace

TEST_CASE("unperturbed roots are r pi / (N+1)") {
  CHECK(std::abs(secular_residual(pi / 11.0, {10, 1, 1.0, 0.0})) <= 1e-14);
  for (int r = 1; r <= 10; ++r)
    CHECK(std::abs(secular_residual(r * pi / 11.0, {10, 3, 1.0, 0.0})) <= 1e-13);
}

TEST_CASE("pi/2 solves the N=23, k=2 chain at any gain") {
  CHECK(std::abs(secular_residual(pi / 2.0, {23, 2, 1.0, 1.7})) <= 1e-13);
}

TEST_CASE("generic point agrees with an extended-precision evaluation") {
  const ChainConfig cfg{10, 1, 1.0, 0.5};
  const cplx F = secular_residual(0.3, cfg);
  const auto ref = oracle::secular_ld(0.3L, 10, 1, 0.5L);
  CHECK(std::abs(F) > 1e-2);
  CHECK(std::abs(F - cplx(double(ref.real()), double(ref.imag()))) <= 1e-14 * std::abs(F));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> re(0.05, pi - 0.05), im(-1.5, 1.5), eta(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 2 + static_cast<int>(rng() % 29);
    const int k = 1 + static_cast<int>(rng() % (N / 2));
    const ChainConfig c{N, k, 1.0, eta(rng)};
    const cplx th(re(rng), im(rng));
    const auto r = oracle::secular_ld(oracle::lcplx(th.real(), th.imag()), N, k, c.eta);
    const double scale = std::max(1.0, double(std::abs(r)));
    CHECK(std::abs(secular_residual(th, c) - cplx(double(r.real()), double(r.imag()))) <= 1e-11 * scale);
  }
}

TEST_CASE("hopping enters only through eta / t") {
  const cplx th(0.7, 0.2);
  CHECK(std::abs(secular_residual(th, {12, 4, 2.0, 1.6}) - secular_residual(th, {12, 4, 1.0, 0.8})) <= 1e-13);
}

TEST_CASE("theta derivatives match central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> re(0.1, pi - 0.1), im(-0.8, 0.8), eta(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 2 + static_cast<int>(rng() % 19);
    const int k = 1 + static_cast<int>(rng() % (N / 2));
    const ChainConfig cfg{N, k, 1.0, eta(rng)};
    const cplx th(re(rng), im(rng));
    const double s = cfg.eta * cfg.eta;
    const cplx analytic = secular_dtheta(th, cfg);
    const cplx fd = fd_theta([&](cplx x) { return secular_residual(x, cfg); }, th, 1e-6);
    CHECK(std::abs(analytic - fd) <= 1e-6 * (1.0 + std::abs(analytic)));
    const SecularTerms T = secular_terms(th, N, k);
    const cplx fd2 = fd_theta([&](cplx x) { return secular_terms(x, N, k).dF(s); }, th, 1e-6);
    CHECK(std::abs(T.d2F(s) - fd2) <= 1e-6 * (1.0 + std::abs(T.d2F(s))));
    const cplx fdB = fd_theta([&](cplx x) { return secular_terms(x, N, k).B; }, th, 1e-6);
    CHECK(std::abs(T.dB - fdB) <= 1e-6 * (1.0 + std::abs(T.dB)));
    const cplx fd2B = fd_theta([&](cplx x) { return secular_terms(x, N, k).dB; }, th, 1e-6);
    CHECK(std::abs(T.d2B - fd2B) <= 1e-6 * (1.0 + std::abs(T.d2B)));
  }
}

TEST_CASE("derivative vanishes at the end-to-end coalescence and reduces at zero gain") {
  CHECK(std::abs(secular_dtheta(pi / 2.0, {10, 1, 1.0, 1.0})) <= 1e-12);
  CHECK(std::abs(secular_residual(pi / 2.0, {10, 1, 1.0, 1.0})) <= 1e-12);
  CHECK(std::abs(secular_dtheta(pi / 5.0, {4, 1, 1.0, 0.0}) - cplx(-5.0)) <= 1e-13);
}

TEST_CASE("trivial points are rejected") {
  const ChainConfig cfg{10, 2, 1.0, 0.5};
  CHECK_THROWS_AS(secular_residual(0.0, cfg), DomainError);
  CHECK_THROWS_AS(secular_residual(pi, cfg), DomainError);
  CHECK_THROWS_AS(secular_dtheta(2.0 * pi, cfg), DomainError);
  CHECK_THROWS_AS(eigenvector_analytic(0.0, cfg), DomainError);
}

TEST_CASE("roots of the secular function are zeros of the characteristic polynomial") {
  for (const ChainConfig cfg : {ChainConfig{10, 1, 1.0, 0.5}, ChainConfig{10, 1, 2.0, 0.0},
                                ChainConfig{17, 5, 1.0, 1.3}, ChainConfig{24, 7, 1.0, 3.0}}) {
    const Spectrum spec = solve_spectrum(cfg);
    for (const EigenPair& p : spec.pairs) {
      const oracle::lcplx E(p.energy.real(), p.energy.imag());
      // Relative to the size of the polynomial's terms, |E|^N + ...
      const long double scale = std::pow(std::abs(E) + 2.0L * std::abs(cfg.t) + cfg.eta, (long double)cfg.N);
      CHECK(double(std::abs(oracle::chain_charpoly(cfg, E)) / scale) <= 1e-12);
    }
  }
}

TEST_CASE("closed-form vector is the standing wave at zero gain") {
  const ChainConfig cfg{9, 3, 1.0, 0.0};
  for (int r = 1; r <= 9; ++r) {
    const double th = r * pi / 10.0;
    const ComplexVector u = eigenvector_analytic(th, cfg);
    ComplexVector ref(9);
    for (int j = 1; j <= 9; ++j) ref[j - 1] = std::sin(j * th);
    ref.normalize();
    CHECK(oracle::phase_aligned_distance(u, ref) <= 1e-12);
  }
}

TEST_CASE("opaque vector has nodes at both contacts") {
  const ChainConfig cfg{23, 6, 1.0, 1.5};
  const ComplexVector u = eigenvector_analytic(pi / 6.0, cfg);
  CHECK(std::abs(u[5]) <= 1e-12);
  CHECK(std::abs(u[17]) <= 1e-12);
  const ComplexMatrix H = build_hamiltonian(cfg);
  CHECK((H * u - 2.0 * std::cos(pi / 6.0) * u).norm() <= 1e-12);
}

TEST_CASE("closed-form vector solves H u = E u for polished roots") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> eta(0.0, 5.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int N = 2 + static_cast<int>(rng() % 29);
    const int k = 1 + static_cast<int>(rng() % (N / 2));
    const ChainConfig cfg{N, k, 1.0, eta(rng)};
    const Spectrum spec = solve_spectrum(cfg);
    const ComplexMatrix H = build_hamiltonian(cfg);
    for (const EigenPair& p : spec.pairs) {
      if (!p.analytic_vector) continue;
      const ComplexVector u = eigenvector_analytic(p.theta, cfg);
      CHECK((H * u - p.energy * u).norm() <= 1e-9);
    }
  }
}

TEST_CASE("the drain term carries +eta^2; the opposite sign does not give an eigenvector") {
  const ChainConfig cfg{10, 2, 1.0, 0.8};
  const Spectrum spec = solve_spectrum(cfg);
  const ComplexMatrix H = build_hamiltonian(cfg);
  const EigenPair& p = spec.pairs[3];
  const cplx th = p.theta;
  const ComplexVector u = eigenvector_forward(th, cfg);
  CHECK((H * u - p.energy * u).norm() <= 1e-9 * u.norm());

  // Same construction with the eta^2 term negated.
  const int N = 10, k = 2;
  const double eta = 0.8;
  const cplx I(0, 1), s = std::sin(th), sk = std::sin(double(k) * th);
  const cplx drain = (I * eta * std::sin(double(N - k + 1) * th) - eta * eta * std::sin(double(N - 2 * k + 1) * th) * sk / s) / s;
  ComplexVector w(N);
  for (int j = 1; j <= N; ++j) {
    cplx v = std::sin(double(j) * th);
    if (j >= k + 1) v -= I * eta * sk * std::sin(double(j - k) * th) / s;
    if (j >= N - k + 2) v += std::sin(double(j - N + k - 1) * th) * drain;
    w[j - 1] = v;
  }
  CHECK((H * w - p.energy * w).norm() > 1e-3 * w.norm());
}

TEST_CASE("contact amplitudes stay accurate for strongly asymmetric states") {
  // Broken phase with an exponentially small contact ratio: compare against
  // the extended-precision recurrence run in its stable (growing) direction.
  for (const ChainConfig cfg : {ChainConfig{30, 1, 1.0, 3.0}, ChainConfig{20, 1, 1.0, 10.0}, ChainConfig{16, 3, 1.0, 4.0}}) {
    const Spectrum spec = solve_spectrum(cfg);
    int checked = 0;
    for (const EigenPair& p : spec.pairs) {
      if (std::abs(p.energy.imag()) < 1e-6) continue;
      const int k = cfg.k - 1, kp = cfg.N - cfg.k;
      const double xi = std::norm(p.vector[kp]) / std::norm(p.vector[k]);
      const auto u = recurrence_vector(cfg, p.energy, xi > 1.0);
      const double ref = double(std::norm(u[kp]) / std::norm(u[k]));
      CHECK(std::abs(std::log(xi) - std::log(ref)) <= 1e-6 * std::max(1.0, std::abs(std::log(ref))));
      ++checked;
    }
    CHECK(checked >= 2);
  }
}

TEST_CASE("non-roots are rejected by the closed form") {
  CHECK_THROWS_AS(eigenvector_analytic(cplx(0.4, 0.1), {10, 2, 1.0, 0.5}), DomainError);
}

TEST_CASE("canonical strip and arccos inversion") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const cplx E(u(rng), trial % 3 == 0 ? 0.0 : u(rng));
    const cplx th = theta_from_energy(E, 1.0);
    CHECK(th.real() >= 0.0);
    CHECK(th.real() <= pi);
    CHECK(std::abs(2.0 * std::cos(th) - E) <= 1e-12 * std::max(1.0, std::abs(E)));
  }
  const cplx th = canonical_theta(cplx(-0.3, 0.2) + 4.0 * pi);
  CHECK(std::abs(th - cplx(0.3, -0.2)) <= 1e-12);
  CHECK(std::abs(std::cos(canonical_theta(cplx(5.0, 1.0))) - std::cos(cplx(5.0, 1.0))) <= 1e-12);
  // Real energy inside the band gives a real theta.
  CHECK(theta_from_energy(1.2, 1.0).imag() == 0.0);
}
