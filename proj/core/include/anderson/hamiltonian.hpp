#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anderson/lattice.hpp"
#include "anderson/potential.hpp"

namespace anderson {

/// H = -eps^-2 Laplacian + xi on D_eps with Dirichlet (zero) exterior,
/// stored as CSR. Symmetric, at most 2d off-diagonals per row. Immutable
/// after assembly.
struct SparseHamiltonian {
  int dim = 0;  // number of sites
  std::vector<int> row_offsets;
  std::vector<int> col_indices;
  std::vector<double> values;
  double eps = 0;
  int lattice_dim = 0;
  std::vector<double> diagonal;  // 2d eps^-2 + xi(x) per row
  bool tridiagonal = false;      // d == 1 path layout

  double entry(int i, int j) const;
  /// Row-sum norm estimate, used for relative residual targets.
  double row_norm_estimate() const;
};

SparseHamiltonian assemble(const LatticeDomain& lattice, const PotentialSample& potential);

/// Convenience overload for deterministic fields.
SparseHamiltonian assemble(const LatticeDomain& lattice, std::span<const double> xi);

Eigen::VectorXd matvec(const SparseHamiltonian& H, const Eigen::VectorXd& v);

/// (Delta f)(x) = sum_{|x-y|=1} [f(y) - f(x)], zero outside D_eps.
std::vector<double> laplacian_apply(const LatticeDomain& lattice,
                                    std::span<const double> f);

/// Dense expansion for brute-force cross checks; guarded at dim <= 4096.
Eigen::MatrixXd dense_oracle(const SparseHamiltonian& H);

/// eps^-2 ||grad f||_2^2 + <xi, f^2>, the Rayleigh-quotient integrand. The
/// discrete gradient sums forward differences over all bonds leaving D_eps.
double quadratic_form(const LatticeDomain& lattice, std::span<const double> xi,
                      std::span<const double> f);

/// Plain-text coordinate dump: "row col value" per line, 17 significant digits.
std::string coordinate_dump(const SparseHamiltonian& H);

}  // namespace anderson
