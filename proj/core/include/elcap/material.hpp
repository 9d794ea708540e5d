#pragma once

#include "elcap/tensor.hpp"

namespace elcap {

/// Material parameters: Lame moduli, surface coefficient gamma, exponents
/// p (second-gradient) and q (surface), second-gradient modulus kappa.
///
/// The bulk density is Saint-Venant--Kirchhoff,
///   W(F) = (lambda/8) (tr(F^T F - I))^2 + (mu/4) |F^T F - I|^2,
/// which is frame indifferent, vanishes exactly on SO(d), and is smooth
/// everywhere. The second-gradient density is H(B) = kappa |B|^p, convex and
/// positively p-homogeneous; with this choice the two comparability
/// constants of the p-growth bounds coincide (both equal kappa).
struct MaterialSpec {
  double lambda = 1.0;  ///< first Lame modulus, >= 0
  double mu = 1.0;      ///< shear modulus, > 0
  double kappa = 1.0;   ///< second-gradient modulus, > 0
  double gamma = 1.0;   ///< surface coefficient, >= 0
  double p = 2.0;       ///< second-gradient exponent, > 1
  double q = 2.0;       ///< surface exponent, >= 1
  int dim = 2;

  /// Throws ConfigError when a constraint is violated, including the
  /// cross-field requirement p >= dim*q/(q+1) (strict p > 1 when dim = 2
  /// and q = 1).
  void validate() const;
};

/// Bulk stored energy W(F) >= 0, zero exactly on SO(d).
double w_bulk(const Mat& f, const MaterialSpec& m);

/// dW/dF = F [ lambda tr(E) I + 2 mu E ], E = (F^T F - I)/2. Vanishes on SO(d).
Mat dw_bulk(const Mat& f, const MaterialSpec& m);

/// (1/2) E : D^2W(I) : E = (lambda/2)(tr E)^2 + mu |E|^2 for symmetric E.
/// Rejects non-symmetric input.
double quad_form(const Mat& e, const MaterialSpec& m);

/// H(B) = kappa |B|^p.
double h_energy(const Tensor3& b, const MaterialSpec& m);

/// dH/dB = kappa p |B|^(p-2) B, with dH(0) := 0 (subgradient selection,
/// needed when 1 < p < 2).
Tensor3 dh_energy(const Tensor3& b, const MaterialSpec& m);

}  // namespace elcap
