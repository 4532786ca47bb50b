#pragma once

#include "ptchain/chain_model.hpp"

namespace ptchain {

/// The PT secular function is affine in s = (eta/t)^2:
///
///   F(theta, s) = A(theta) + s * B(theta),
///   A = sin((N+1) theta),
///   B = sin((N-2k+1) theta) * sin^2(k theta) / sin^2(theta).
///
/// SecularTerms carries A, B and their first two theta-derivatives, which is
/// everything the root polisher and the exceptional-point solver need.
struct SecularTerms {
  cplx A, dA, d2A;
  cplx B, dB, d2B;

  cplx F(double s) const { return A + s * B; }
  cplx dF(double s) const { return dA + s * dB; }
  cplx d2F(double s) const { return d2A + s * d2B; }
  /// max(1, |A| + s|B|): magnitude used to judge closeness to a root when the
  /// individual terms are exponentially large (complex theta).
  double scale(double s) const;
};

/// Throws DomainError if |sin(theta)| <= 1e-14.
SecularTerms secular_terms(cplx theta, int N, int k);

cplx secular_residual(cplx theta, const ChainConfig& cfg);
cplx secular_dtheta(cplx theta, const ChainConfig& cfg);

/// |F| / scale, the quantity the polisher drives below SolverOptions::secular_tol.
double scaled_secular_residual(cplx theta, const ChainConfig& cfg);

/// Eigenvector components from the closed form in the gauge u_1 = sin(theta),
/// unit-normalized with the largest component made real and positive.
///
/// For PT-symmetric chains the vector for theta can equally be obtained as
/// J conj(u(conj theta)). The closed form accumulates from site 1, so it loses
/// relative accuracy on components that decay away from the gain contact. For
/// Im E > 0 (equivalently |u_k| > |u_k'|) the mirrored route is used instead,
/// which keeps the small contact amplitude (and therefore the transport
/// coefficient) accurate.
ComplexVector eigenvector_analytic(cplx theta, const ChainConfig& cfg);

/// Unnormalized closed form, gauge u_1 = sin(theta), always accumulated from site 1.
ComplexVector eigenvector_forward(cplx theta, const ChainConfig& cfg);

/// Scales v to unit norm and rotates its largest component onto the positive real axis.
ComplexVector normalize_gauge(ComplexVector v);

/// Maps theta to the strip 0 <= Re(theta) <= pi using theta -> -theta and
/// theta -> theta + 2 pi. On the strip edges Im(theta) >= 0 is chosen.
cplx canonical_theta(cplx theta);

/// Principal pseudo-momentum for an energy: arccos(E / 2t) on the canonical strip.
cplx theta_from_energy(cplx E, double t);

}  // namespace ptchain
