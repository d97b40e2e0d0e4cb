#pragma once

#include <span>
#include <vector>

#include "anderson/lattice.hpp"

namespace anderson {

/// Diagonal of the reduced resolvent, G^(k)(x,x) = sum_{i != k}
/// g_i(x)^2 / (lambda_i - lambda_k), from the full dense spectrum.
struct GreenDiag {
  double value = 0;
  int k = 0;
  int site = 0;
};

struct DerivativeCheck {
  double fd = 0;        // central difference of lambda^(k) in xi(site)
  double analytic = 0;  // g^(k)(site)^2
  double rel_err = 0;
};

/// Central-difference probe of the first variation formula
/// d lambda^(k) / d xi(x) = g^(k)(x)^2 at step h.
DerivativeCheck hadamard_derivative_check(const LatticeDomain& lattice,
                                          std::span<const double> xi, int k, int site,
                                          double h);

GreenDiag spectral_green_diag(const LatticeDomain& lattice, std::span<const double> xi,
                              int k, int site);

struct SecondVariationCheck {
  double lhs = 0;  // |g^(k)(site)| at xi(site) = xi_to
  double rhs = 0;  // |g^(k)(site)| at xi_from, times exp of the Green integral
  double rel_err = 0;
};

/// Verify |g(xi_to)| = |g(xi_from)| exp(int G dt) along the one-parameter
/// segment, trapezoid rule with n_quad intervals. Throws DegeneracyOnPath if
/// any quadrature node has a near-degenerate lambda^(k).
SecondVariationCheck second_variation_check(const LatticeDomain& lattice,
                                            std::span<const double> xi, int k, int site,
                                            double xi_from, double xi_to, int n_quad);

}  // namespace anderson
