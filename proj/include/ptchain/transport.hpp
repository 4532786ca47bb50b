#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ptchain/chain_model.hpp"
#include "ptchain/spectrum.hpp"

namespace ptchain {

/// Site amplitudes c_n(t) of |Psi(t)> = sum_n c_n(t) |n>.
struct WaveState {
  ComplexVector c;
  double time = 0.0;
};

struct FluxProfile {
  /// J[n-1] holds J_n for n = 1..N+1; J_1 = J_{N+1} = 0.
  std::vector<double> J;
  double source = 0.0;  // 2 eta |c_k|^2
  double sink = 0.0;    // 2 eta |c_k'|^2
};

/// J_n = -2 Im(c_n conj(c_{n-1})), n is 1-based. J_1 and J_{N+1} are 0;
/// anything outside [1, N+1] is a UsageError.
double local_flux(const WaveState& state, int n);

FluxProfile flux_profile(const WaveState& state, const ChainConfig& cfg);

/// d rho_nn / dt taken from the Schroedinger right-hand side, c' = -i H c.
std::vector<double> density_rate(const WaveState& state, const ChainConfig& cfg);

/// Per-site residual of
///   d rho_nn/dt + t (J_{n+1} - J_n) = 2 eta |c_k|^2 delta_{nk} - 2 eta |c_k'|^2 delta_{nk'}.
/// It vanishes identically up to rounding for every state.
std::vector<double> continuity_residual(const WaveState& state, const ChainConfig& cfg);

struct TransportCoefficient {
  enum class Kind {
    Defined,
    Undefined,  // both contact amplitudes vanish (opaque state)
    OneSided,   // exactly one contact amplitude is below tolerance; value still reported
  };
  Kind kind = Kind::Defined;
  double value = 0.0;

  std::optional<double> xi() const {
    if (kind == Kind::Undefined) return std::nullopt;
    return value;
  }
};

/// xi = |u_k'|^2 / |u_k|^2 for an eigenvector of the chain.
TransportCoefficient transport_coefficient(const ComplexVector& vector, const ChainConfig& cfg,
                                           double amplitude_tol = 1e-9);

/// Leading-order values (e^{+s}, e^{-s}), s = sqrt(N (eta^2 - 1) / 2), for the
/// pair born at the end-to-end exceptional point. Requires eta > 1 and even N.
/// The linearized form 1 +- s agrees to first order in s.
std::pair<double, double> xi_perturbative(int N, double eta);

/// (4 eta^{2(N-1)}, 1 / (4 eta^{2(N-1)})) for the end-to-end chain. Requires eta >= 10.
std::pair<double, double> xi_asymptotic(int N, double eta);

struct TransportRecord {
  cplx theta;
  cplx energy;
  TransportCoefficient xi;
  StateTag tag;
};

struct TransportReport {
  ChainConfig config;
  std::vector<TransportRecord> records;  // same order as Spectrum::pairs
};

TransportReport make_transport_report(const Spectrum& spectrum, double amplitude_tol = 1e-9);

/// 1e-3 / max(1, eta).
double default_time_step(const ChainConfig& cfg);

/// Classical RK4 on c' = -i H c with fixed step dt. The last step is shortened
/// so the final sample sits exactly at initial.time + t_final. No
/// renormalization is applied. Throws NumericalError if dt lies outside the
/// RK4 stability region for this H, or if ||c||^2 ever exceeds
/// 10 e^{2 eta t} ||c(0)||^2 (the exact flow is bounded by e^{2 eta t}).
///
/// Returns the initial state followed by one state every `sample_every` steps
/// (the final state is always included).
std::vector<WaveState> evolve(const WaveState& initial, const ChainConfig& cfg, double t_final,
                              double dt, int sample_every = 1);

/// Same integration, streaming every step (including the initial state) to `visit`.
void evolve_visit(const WaveState& initial, const ChainConfig& cfg, double t_final, double dt,
                  const std::function<void(const WaveState&)>& visit);

/// Evolves the eigenstate and returns max_t |xi(t) - xi(0)|. Opaque input is a
/// DomainError. dt <= 0 selects default_time_step(cfg).
double xi_time_independence_check(const EigenPair& pair, const ChainConfig& cfg, double t_final,
                                  double dt = 0.0);

}  // namespace ptchain
