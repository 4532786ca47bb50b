#include "ptchain/secular.hpp"

#include <cmath>
#include <numbers>

#include "ptchain/errors.hpp"

namespace ptchain {

namespace {

constexpr double kTrivialSinTol = 1e-14;
// Closed-form eigenvectors are only meaningful at (approximate) roots.
constexpr double kEigenvectorRootTol = 1e-6;

void check_nontrivial(cplx theta) {
  if (std::abs(std::sin(theta)) <= kTrivialSinTol)
    throw DomainError("secular equation evaluated at a trivial point theta = m*pi");
}

}  // namespace

double SecularTerms::scale(double s) const {
  return std::max(1.0, std::abs(A) + s * std::abs(B));
}

SecularTerms secular_terms(cplx theta, int N, int k) {
  check_nontrivial(theta);
  const double n1 = N + 1;
  const double m = N - 2 * k + 1;
  const double kk = k;

  SecularTerms T;
  const cplx sn1 = std::sin(n1 * theta);
  T.A = sn1;
  T.dA = n1 * std::cos(n1 * theta);
  T.d2A = -n1 * n1 * sn1;

  // B = P * Q with P = sin(m th) sin^2(k th), Q = sin^-2(th).
  const cplx sm = std::sin(m * theta), cm = std::cos(m * theta);
  const cplx sk = std::sin(kk * theta);
  const cplx s2k = std::sin(2.0 * kk * theta), c2k = std::cos(2.0 * kk * theta);
  const cplx P = sm * sk * sk;
  const cplx dP = m * cm * sk * sk + kk * sm * s2k;
  const cplx d2P = -m * m * sm * sk * sk + 2.0 * m * kk * cm * s2k + 2.0 * kk * kk * sm * c2k;

  const cplx s = std::sin(theta), c = std::cos(theta);
  const cplx inv2 = 1.0 / (s * s);
  const cplx Q = inv2;
  const cplx dQ = -2.0 * c * inv2 / s;
  const cplx d2Q = 2.0 * inv2 + 6.0 * c * c * inv2 * inv2;

  T.B = P * Q;
  T.dB = dP * Q + P * dQ;
  T.d2B = d2P * Q + 2.0 * dP * dQ + P * d2Q;
  return T;
}

cplx secular_residual(cplx theta, const ChainConfig& cfg) {
  const double r = cfg.reduced_eta();
  return secular_terms(theta, cfg.N, cfg.k).F(r * r);
}

cplx secular_dtheta(cplx theta, const ChainConfig& cfg) {
  const double r = cfg.reduced_eta();
  return secular_terms(theta, cfg.N, cfg.k).dF(r * r);
}

double scaled_secular_residual(cplx theta, const ChainConfig& cfg) {
  const double r = cfg.reduced_eta();
  const SecularTerms T = secular_terms(theta, cfg.N, cfg.k);
  return std::abs(T.F(r * r)) / T.scale(r * r);
}

ComplexVector eigenvector_forward(cplx theta, const ChainConfig& cfg) {
  check_nontrivial(theta);
  // Extended precision: for complex theta the sines grow like exp(j |Im theta|)
  // and the sums below cancel down to the decaying eigenvector, so the root is
  // also sharpened beyond double before use.
  using lcplx = std::complex<long double>;
  const int N = cfg.N, k = cfg.k;
  const long double eta = cfg.reduced_eta();
  lcplx th(theta.real(), theta.imag());
  const auto secular = [&](lcplx x) {
    const lcplx sx = std::sin(x), sk = std::sin(static_cast<long double>(k) * x);
    return std::sin(static_cast<long double>(N + 1) * x) +
           eta * eta * std::sin(static_cast<long double>(N - 2 * k + 1) * x) * sk * sk / (sx * sx);
  };
  for (int it = 0; it < 3; ++it) {
    constexpr long double h = 1e-6L;
    const lcplx d = (secular(th + h) - secular(th - h)) / (2.0L * h);
    if (std::abs(d) == 0.0L) break;
    const lcplx step = secular(th) / d;
    // Only a sharpening: never move off the double-precision root.
    if (!(std::abs(step) <= 1e-12L * std::max(1.0L, std::abs(th)))) break;
    th -= step;
  }
  const lcplx I(0.0L, 1.0L);
  const auto sin_n = [&](int n) { return std::sin(static_cast<long double>(n) * th); };
  const lcplx s = std::sin(th);
  const lcplx sk = sin_n(k);
  // Kick received after the loss site; the eta^2 sign follows from the
  // general tridiagonal solution with alpha = -i eta, beta = +i eta.
  const lcplx drain = (I * eta * sin_n(N - k + 1) + eta * eta * sin_n(N - 2 * k + 1) * sk / s) / s;
  ComplexVector u(N);
  for (int j = 1; j <= N; ++j) {
    lcplx v = sin_n(j);
    if (j >= k + 1) v -= I * eta * sk * sin_n(j - k) / s;
    if (j >= N - k + 2) v += sin_n(j - N + k - 1) * drain;
    u[j - 1] = cplx(static_cast<double>(v.real()), static_cast<double>(v.imag()));
  }
  return u;
}

ComplexVector normalize_gauge(ComplexVector v) {
  const double nrm = v.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("cannot normalize a zero or non-finite vector");
  v /= nrm;
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cplx phase = std::abs(v[imax]) > 0.0 ? std::conj(v[imax]) / std::abs(v[imax]) : cplx(1.0);
  v *= phase;
  v[imax] = cplx(v[imax].real(), 0.0);
  return v;
}

ComplexVector eigenvector_analytic(cplx theta, const ChainConfig& cfg) {
  cfg.validate();
  if (scaled_secular_residual(theta, cfg) > kEigenvectorRootTol)
    throw DomainError("eigenvector_analytic: theta is not a root of the secular equation");
  // Norm balance of c' = -iHc for an eigenstate: Im E ||u||^2 = eta (|u_k|^2 - |u_k'|^2),
  // so Im E > 0 exactly when the loss contact carries the smaller amplitude.
  const double im_energy = cfg.t * std::imag(std::cos(theta));
  if (im_energy > 0.0) {
    const ComplexVector g = eigenvector_forward(std::conj(theta), cfg);
    return normalize_gauge(g.conjugate().reverse());
  }
  return normalize_gauge(eigenvector_forward(theta, cfg));
}

cplx canonical_theta(cplx theta) {
  constexpr double pi = std::numbers::pi;
  double re = std::remainder(theta.real(), 2.0 * pi);  // (-pi, pi]
  double im = theta.imag();
  if (re < 0.0) {
    re = -re;
    im = -im;
  }
  if ((re == 0.0 || re == pi) && im < 0.0) im = -im;
  return {re, im};
}

cplx theta_from_energy(cplx E, double t) {
  return canonical_theta(std::acos(E / (2.0 * t)));
}

}  // namespace ptchain
