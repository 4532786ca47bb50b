#include "ptchain/general_tridiag.hpp"

#include <cmath>
#include <string>

#include "ptchain/errors.hpp"
#include "ptchain/secular.hpp"

namespace ptchain {

namespace {

constexpr double kTrivialSinTol = 1e-14;

struct GeneralTerms {
  cplx value;
  cplx derivative;
  double scale;
};

GeneralTerms general_terms(cplx theta, const GeneralTridiag& m) {
  m.validate();
  const cplx s = std::sin(theta), c = std::cos(theta);
  if (std::abs(s) <= kTrivialSinTol)
    throw DomainError("general secular equation evaluated at a trivial point theta = m*pi");
  const double N = m.N, k = m.k;
  const double n1 = N + 1, nk = N - k + 1, inner = N - 2 * k + 1;
  const cplx r = m.sqrt_ac();
  const cplx sum = m.alpha + m.beta, prod = m.alpha * m.beta;

  const cplx sk = std::sin(k * theta), ck = std::cos(k * theta);
  const cplx snk = std::sin(nk * theta), cnk = std::cos(nk * theta);
  const cplx sm = std::sin(inner * theta), cm = std::cos(inner * theta);

  const cplx S1 = snk * sk;
  const cplx dS1 = nk * cnk * sk + k * snk * ck;
  const cplx S2 = sm * sk * sk;
  const cplx dS2 = inner * cm * sk * sk + k * sm * std::sin(2.0 * k * theta);

  const cplx t0 = std::sin(n1 * theta);
  const cplx t1 = sum / r * S1 / s;
  const cplx t2 = prod / (r * r) * S2 / (s * s);
  const cplx d0 = n1 * std::cos(n1 * theta);
  const cplx d1 = sum / r * (dS1 * s - S1 * c) / (s * s);
  const cplx d2 = prod / (r * r) * (dS2 / (s * s) - 2.0 * S2 * c / (s * s * s));

  return {t0 + t1 + t2, d0 + d1 + d2,
          std::max(1.0, std::abs(t0) + std::abs(t1) + std::abs(t2))};
}

}  // namespace

void GeneralTridiag::validate() const {
  if (N < 2) throw ConfigError("general tridiagonal: N must be at least 2");
  if (k < 1 || 2 * k > N)
    throw ConfigError("general tridiagonal: k must lie in [1, N/2], got " + std::to_string(k));
  if (a * c == cplx(0.0)) throw ConfigError("general tridiagonal: a*c must be nonzero");
}

GeneralTridiag GeneralTridiag::from_chain(const ChainConfig& cfg) {
  cfg.validate();
  GeneralTridiag m;
  m.a = cfg.t;
  m.c = cfg.t;
  m.b = 0.0;
  m.alpha = cplx(0.0, -cfg.eta);
  m.beta = cplx(0.0, cfg.eta);
  m.N = cfg.N;
  m.k = cfg.k;
  return m;
}

ComplexMatrix assemble_general_matrix(const GeneralTridiag& m) {
  m.validate();
  ComplexMatrix A = ComplexMatrix::Zero(m.N, m.N);
  for (int j = 0; j < m.N; ++j) {
    A(j, j) = m.b;
    if (j > 0) A(j, j - 1) = m.a;
    if (j + 1 < m.N) A(j, j + 1) = m.c;
  }
  A(m.k - 1, m.k - 1) -= m.alpha;
  A(m.N - m.k, m.N - m.k) -= m.beta;
  return A;
}

cplx general_secular_residual(cplx theta, const GeneralTridiag& m) {
  return general_terms(theta, m).value;
}

cplx general_secular_dtheta(cplx theta, const GeneralTridiag& m) {
  return general_terms(theta, m).derivative;
}

cplx general_eigenvalue(cplx theta, const GeneralTridiag& m) {
  return m.b + 2.0 * m.sqrt_ac() * std::cos(theta);
}

cplx general_theta_from_eigenvalue(cplx lambda, const GeneralTridiag& m) {
  m.validate();
  return canonical_theta(std::acos((lambda - m.b) / (2.0 * m.sqrt_ac())));
}

cplx polish_general_root(cplx theta, const GeneralTridiag& m, int max_iters) {
  const cplx start = theta;
  for (int it = 0; it < max_iters; ++it) {
    const GeneralTerms g = general_terms(theta, m);
    if (g.derivative == cplx(0.0)) break;
    const cplx step = g.value / g.derivative;
    theta -= step;
    if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(theta))) break;
  }
  // A wandering iterate means the seed sat too close to another root.
  if (!std::isfinite(std::abs(theta)) || std::abs(theta - start) > 1e-3) return start;
  return theta;
}

ComplexVector general_eigenvector(cplx theta, const GeneralTridiag& m) {
  const GeneralTerms g = general_terms(theta, m);
  if (std::abs(g.value) / g.scale > 1e-6)
    throw DomainError("general_eigenvector: theta is not a root of the general secular equation");
  const int N = m.N, k = m.k;
  const cplx r = m.sqrt_ac(), rho = m.rho();
  const cplx s = std::sin(theta);
  const cplx sk = std::sin(double(k) * theta);
  const cplx source_kick = m.alpha * sk / (r * s);
  const cplx drain_kick =
      m.beta / (r * s) *
      (std::sin(double(N - k + 1) * theta) +
       m.alpha / (r * s) * std::sin(double(N - 2 * k + 1) * theta) * sk);
  ComplexVector u(N);
  cplx rho_j = 1.0;
  for (int j = 1; j <= N; ++j) {
    rho_j *= rho;
    cplx v = std::sin(double(j) * theta);
    if (j >= k + 1) v += source_kick * std::sin(double(j - k) * theta);
    if (j >= N - k + 2) v += drain_kick * std::sin(double(j - N + k - 1) * theta);
    u[j - 1] = rho_j * v;
  }
  return normalize_gauge(std::move(u));
}

}  // namespace ptchain
