#include "ptchain/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptchain/errors.hpp"

namespace ptchain {

namespace {

// |lambda dt| along the imaginary axis must stay inside the RK4 stability
// region, whose extent there is 2 sqrt(2) ~ 2.83.
constexpr double kRk4StabilityLimit = 2.8;

void check_state(const WaveState& state, const ChainConfig& cfg) {
  cfg.validate();
  if (state.c.size() != cfg.N)
    throw UsageError("state has " + std::to_string(state.c.size()) + " amplitudes, chain has N=" +
                     std::to_string(cfg.N));
}

}  // namespace

double local_flux(const WaveState& state, int n) {
  const int N = static_cast<int>(state.c.size());
  if (n < 1 || n > N + 1) throw UsageError("local_flux: site index out of range");
  if (n == 1 || n == N + 1) return 0.0;
  return -2.0 * std::imag(state.c[n - 1] * std::conj(state.c[n - 2]));
}

FluxProfile flux_profile(const WaveState& state, const ChainConfig& cfg) {
  check_state(state, cfg);
  FluxProfile f;
  f.J.resize(static_cast<std::size_t>(cfg.N + 1));
  for (int n = 1; n <= cfg.N + 1; ++n) f.J[n - 1] = local_flux(state, n);
  f.source = 2.0 * cfg.eta * std::norm(state.c[cfg.k - 1]);
  f.sink = 2.0 * cfg.eta * std::norm(state.c[cfg.loss_site() - 1]);
  return f;
}

std::vector<double> density_rate(const WaveState& state, const ChainConfig& cfg) {
  check_state(state, cfg);
  const ComplexVector Hc = apply_hamiltonian(cfg, state.c);
  std::vector<double> rate(static_cast<std::size_t>(cfg.N));
  // d|c_n|^2/dt = 2 Re(conj(c_n) * (-i (H c)_n)) = 2 Im(conj(c_n) (H c)_n)
  for (int n = 0; n < cfg.N; ++n) rate[n] = 2.0 * std::imag(std::conj(state.c[n]) * Hc[n]);
  return rate;
}

std::vector<double> continuity_residual(const WaveState& state, const ChainConfig& cfg) {
  const std::vector<double> rate = density_rate(state, cfg);
  const FluxProfile f = flux_profile(state, cfg);
  std::vector<double> res(static_cast<std::size_t>(cfg.N));
  for (int n = 1; n <= cfg.N; ++n) {
    double r = rate[n - 1] + cfg.t * (f.J[n] - f.J[n - 1]);
    if (n == cfg.k) r -= f.source;
    if (n == cfg.loss_site()) r += f.sink;
    res[n - 1] = r;
  }
  return res;
}

TransportCoefficient transport_coefficient(const ComplexVector& vector, const ChainConfig& cfg,
                                           double amplitude_tol) {
  cfg.validate();
  if (vector.size() != cfg.N) throw UsageError("transport_coefficient: vector length does not match N");
  // Amplitudes relative to the unit-normalized vector.
  const double nrm = vector.norm();
  if (!(nrm > 0.0)) throw UsageError("transport_coefficient: zero vector");
  const double uk = std::abs(vector[cfg.k - 1]) / nrm;
  const double ukp = std::abs(vector[cfg.loss_site() - 1]) / nrm;
  const bool k_small = uk < amplitude_tol, kp_small = ukp < amplitude_tol;
  TransportCoefficient out;
  if (k_small && kp_small) {
    out.kind = TransportCoefficient::Kind::Undefined;
    return out;
  }
  out.kind = (k_small != kp_small) ? TransportCoefficient::Kind::OneSided
                                   : TransportCoefficient::Kind::Defined;
  out.value = uk > 0.0 ? (ukp * ukp) / (uk * uk) : std::numeric_limits<double>::infinity();
  return out;
}

std::pair<double, double> xi_perturbative(int N, double eta) {
  if (!(eta > 1.0)) throw DomainError("xi_perturbative: requires eta > 1");
  if (N < 2 || N % 2 != 0) throw DomainError("xi_perturbative: requires even N");
  const double s = std::sqrt(N * (eta * eta - 1.0) / 2.0);
  return {std::exp(s), std::exp(-s)};
}

std::pair<double, double> xi_asymptotic(int N, double eta) {
  if (!(eta >= 10.0)) throw DomainError("xi_asymptotic: requires eta >= 10");
  if (N < 2) throw DomainError("xi_asymptotic: requires N >= 2");
  const double big = 4.0 * std::pow(eta, 2.0 * (N - 1));
  return {big, 1.0 / big};
}

TransportReport make_transport_report(const Spectrum& spectrum, double amplitude_tol) {
  TransportReport rep;
  rep.config = spectrum.config;
  rep.records.reserve(spectrum.pairs.size());
  for (const EigenPair& p : spectrum.pairs) {
    TransportRecord r{p.theta, p.energy, transport_coefficient(p.vector, spectrum.config, amplitude_tol),
                      p.tag};
    // Opaque states decouple from both contacts; xi is undefined for them
    // even when rounding leaves a tiny contact amplitude.
    if (p.tag == StateTag::Opaque) r.xi = {TransportCoefficient::Kind::Undefined, 0.0};
    rep.records.push_back(r);
  }
  return rep;
}

double default_time_step(const ChainConfig& cfg) {
  return 1e-3 / std::max(1.0, cfg.eta);
}

void evolve_visit(const WaveState& initial, const ChainConfig& cfg, double t_final, double dt,
                  const std::function<void(const WaveState&)>& visit) {
  check_state(initial, cfg);
  if (!(dt > 0.0)) throw UsageError("evolve: dt must be positive");
  if (!(t_final >= 0.0)) throw UsageError("evolve: t_final must be non-negative");
  // Gershgorin bound on the spectral radius.
  const double radius = 2.0 * std::abs(cfg.t) + cfg.eta;
  if (dt * radius > kRk4StabilityLimit)
    throw NumericalError("evolve: step size dt=" + std::to_string(dt) +
                         " is outside the RK4 stability region (need dt * (2|t| + eta) <= 2.8)");

  const cplx minus_i(0.0, -1.0);
  const auto rhs = [&](const ComplexVector& c) -> ComplexVector {
    return minus_i * apply_hamiltonian(cfg, c);
  };
  const double norm0 = initial.c.squaredNorm();

  WaveState state = initial;
  visit(state);
  const long long steps = static_cast<long long>(std::ceil(t_final / dt - 1e-9));
  for (long long n = 1; n <= steps; ++n) {
    const double t_next = (n == steps) ? initial.time + t_final : initial.time + n * dt;
    const double h = t_next - state.time;
    const ComplexVector k1 = rhs(state.c);
    const ComplexVector k2 = rhs(state.c + 0.5 * h * k1);
    const ComplexVector k3 = rhs(state.c + 0.5 * h * k2);
    const ComplexVector k4 = rhs(state.c + h * k3);
    state.c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    state.time = t_next;
    const double elapsed = t_next - initial.time;
    const double norm = state.c.squaredNorm();
    if (!std::isfinite(norm) || norm > 10.0 * std::exp(2.0 * cfg.eta * elapsed) * norm0)
      throw NumericalError("evolve: norm growth exceeds the analytic bound at t=" +
                           std::to_string(t_next) + "; reduce dt");
    visit(state);
  }
}

std::vector<WaveState> evolve(const WaveState& initial, const ChainConfig& cfg, double t_final,
                              double dt, int sample_every) {
  if (sample_every < 1) throw UsageError("evolve: sample_every must be at least 1");
  std::vector<WaveState> out;
  long long counter = 0;
  const double t_end = initial.time + t_final;
  evolve_visit(initial, cfg, t_final, dt, [&](const WaveState& s) {
    if (counter++ % sample_every == 0 || s.time == t_end) out.push_back(s);
  });
  if (out.back().time != t_end) out.push_back(out.back());
  return out;
}

double xi_time_independence_check(const EigenPair& pair, const ChainConfig& cfg, double t_final,
                                  double dt) {
  if (pair.tag == StateTag::Opaque ||
      transport_coefficient(pair.vector, cfg).kind == TransportCoefficient::Kind::Undefined)
    throw DomainError("xi_time_independence_check: xi is undefined for opaque states");
  if (dt <= 0.0) dt = default_time_step(cfg);
  const int k = cfg.k - 1, kp = cfg.loss_site() - 1;
  const auto xi = [&](const ComplexVector& c) { return std::norm(c[kp]) / std::norm(c[k]); };
  const double xi0 = xi(pair.vector);
  double drift = 0.0;
  evolve_visit({pair.vector, 0.0}, cfg, t_final, dt,
               [&](const WaveState& s) { drift = std::max(drift, std::abs(xi(s.c) - xi0)); });
  return drift;
}

}  // namespace ptchain
