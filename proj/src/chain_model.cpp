#include "ptchain/chain_model.hpp"

#include <cmath>
#include <string>

#include "ptchain/errors.hpp"

namespace ptchain {

void ChainConfig::validate() const {
  if (N < 2) throw ConfigError("chain length N must be at least 2, got " + std::to_string(N));
  if (k < 1 || 2 * k > N)
    throw ConfigError("gain site k must lie in [1, N/2], got k=" + std::to_string(k) +
                      " for N=" + std::to_string(N));
  if (t == 0.0 || !std::isfinite(t)) throw ConfigError("hopping t must be finite and nonzero");
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw ConfigError("gain/loss strength eta must be finite and non-negative");
}

ChainConfig ChainConfig::normalized(int N, int k, double t, double eta) {
  ChainConfig cfg{N, k, t, eta, false};
  if (N >= 2 && 2 * k > N && k <= N) {
    cfg.k = N - k + 1;
    cfg.mirrored = true;
  }
  cfg.validate();
  return cfg;
}

ComplexMatrix build_hamiltonian(const ChainConfig& cfg) {
  cfg.validate();
  const int n = cfg.N;
  ComplexMatrix H = ComplexMatrix::Zero(n, n);
  for (int j = 0; j + 1 < n; ++j) {
    H(j, j + 1) = cfg.t;
    H(j + 1, j) = cfg.t;
  }
  H(cfg.k - 1, cfg.k - 1) = cplx(0.0, cfg.eta);
  H(cfg.loss_site() - 1, cfg.loss_site() - 1) = cplx(0.0, -cfg.eta);
  return H;
}

ComplexMatrix pt_exchange(int N) {
  if (N < 1) throw UsageError("pt_exchange: N must be positive");
  ComplexMatrix J = ComplexMatrix::Zero(N, N);
  for (int i = 0; i < N; ++i) J(i, N - 1 - i) = 1.0;
  return J;
}

bool is_pt_symmetric(const ComplexMatrix& H, double tol) {
  if (H.rows() != H.cols()) throw UsageError("is_pt_symmetric: matrix must be square");
  const Eigen::Index n = H.rows();
  // J conj(H) J reverses both row and column order of conj(H).
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(std::conj(H(n - 1 - i, n - 1 - j)) - H(i, j)));
  return worst < tol;
}

ComplexVector apply_hamiltonian(const ChainConfig& cfg, const ComplexVector& c) {
  const int n = cfg.N;
  if (c.size() != n) throw UsageError("apply_hamiltonian: state length does not match N");
  ComplexVector out(n);
  for (int j = 0; j < n; ++j) {
    cplx v = 0.0;
    if (j > 0) v += c[j - 1];
    if (j + 1 < n) v += c[j + 1];
    out[j] = cfg.t * v;
  }
  out[cfg.k - 1] += cplx(0.0, cfg.eta) * c[cfg.k - 1];
  out[cfg.loss_site() - 1] -= cplx(0.0, cfg.eta) * c[cfg.loss_site() - 1];
  return out;
}

}  // namespace ptchain
