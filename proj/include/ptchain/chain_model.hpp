#pragma once

#include <complex>

#include <Eigen/Dense>

namespace ptchain {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Tight-binding chain of N sites with gain +i*eta at site k and loss -i*eta
/// at the mirror site k' = N - k + 1. Sites are 1-based.
struct ChainConfig {
  int N = 2;
  int k = 1;
  double t = 1.0;
  double eta = 0.0;
  /// Set by normalized() when the request named the gain site in the right
  /// half of the chain and it was reflected into [1, N/2].
  bool mirrored = false;

  int loss_site() const { return N - k + 1; }

  /// Effective gain/loss strength in units of the hopping, eta / t.
  double reduced_eta() const { return eta / t; }

  ChainConfig with_eta(double new_eta) const {
    ChainConfig c = *this;
    c.eta = new_eta;
    return c;
  }

  /// Throws ConfigError unless 1 <= k <= N/2, t != 0, eta >= 0 (and finite).
  void validate() const;

  /// Builds a validated config. A gain site k > N/2 is replaced by its mirror
  /// N - k + 1 and the result is flagged as mirrored.
  static ChainConfig normalized(int N, int k, double t = 1.0, double eta = 0.0);

  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

ComplexMatrix build_hamiltonian(const ChainConfig& cfg);

/// Exchange (anti-identity) matrix, J_ij = delta_{i, N-j+1}.
ComplexMatrix pt_exchange(int N);

/// True iff max_ij |(J conj(H) J - H)_ij| < tol.
bool is_pt_symmetric(const ComplexMatrix& H, double tol);

/// Applies H to c without forming the dense matrix.
ComplexVector apply_hamiltonian(const ChainConfig& cfg, const ComplexVector& c);

}  // namespace ptchain
