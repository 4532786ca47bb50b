#pragma once

#include "ptchain/chain_model.hpp"

namespace ptchain {

/// Tridiagonal matrix with constant diagonal b, sub-diagonal a, super-diagonal c,
/// and two impurities on the diagonal:
///
///   A(j, j) = b,  A(j, j-1) = a,  A(j, j+1) = c,
///   A(k, k) = b - alpha,  A(N-k+1, N-k+1) = b - beta.
///
/// No relation between alpha and beta is assumed.
struct GeneralTridiag {
  cplx a{1.0}, b{0.0}, c{1.0}, alpha{0.0}, beta{0.0};
  int N = 2;
  int k = 1;

  /// Throws ConfigError unless a*c != 0 and 1 <= k <= N/2.
  void validate() const;

  /// Principal square root of a*c.
  cplx sqrt_ac() const { return std::sqrt(a * c); }
  /// rho with rho^2 = a/c, chosen as sqrt(ac)/c so that a/rho = c*rho = sqrt(ac).
  cplx rho() const { return sqrt_ac() / c; }

  /// The PT chain as a special case: a = c = t, b = 0, alpha = -i eta, beta = +i eta.
  static GeneralTridiag from_chain(const ChainConfig& cfg);
};

ComplexMatrix assemble_general_matrix(const GeneralTridiag& m);

cplx general_secular_residual(cplx theta, const GeneralTridiag& m);
cplx general_secular_dtheta(cplx theta, const GeneralTridiag& m);

/// lambda = b + 2 sqrt(ac) cos(theta).
cplx general_eigenvalue(cplx theta, const GeneralTridiag& m);

/// Inverse of general_eigenvalue on the canonical strip.
cplx general_theta_from_eigenvalue(cplx lambda, const GeneralTridiag& m);

/// Newton refinement of a root of the general secular function.
cplx polish_general_root(cplx theta, const GeneralTridiag& m, int max_iters = 50);

/// Closed-form eigenvector in the gauge where the common prefactor
/// c u_1 / (sqrt(ac) sin theta) equals one; unit-normalized, largest
/// component real positive.
ComplexVector general_eigenvector(cplx theta, const GeneralTridiag& m);

}  // namespace ptchain
