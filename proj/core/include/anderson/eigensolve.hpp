#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"

namespace anderson {

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns, l2-orthonormal, sign-fixed
  Eigen::VectorXd residuals;     // ||H g - lambda g||_2 per pair
  Eigen::VectorXd gaps;          // consecutive differences
  std::vector<bool> simple_flags;
};

enum class SolveMethod { Auto, Dense, Lanczos };

/// Dimension below which Auto takes the exact dense path.
inline constexpr int kDenseThreshold = 2000;

/// Lowest k eigenpairs. Dense path below kDenseThreshold (tridiagonal fast
/// path for d=1 chains), otherwise Lanczos with full reorthogonalization and
/// thick restarts. Residual target tol * (|lambda| + row-norm estimate).
SpectrumResult lowest_k(const SparseHamiltonian& H, int k, double tol,
                        SolveMethod method = SolveMethod::Auto);

/// Eigenvalues only; skips Ritz-vector extraction where possible. Same
/// accuracy contract as lowest_k.
Eigen::VectorXd lowest_k_values(const SparseHamiltonian& H, int k, double tol,
                                SolveMethod method = SolveMethod::Auto);

/// Deterministic continuum spectrum of H_{D,U} = -Delta + U. Analytic for
/// boxes with U == 0, otherwise a fine-grid discrete solve with a two-grid
/// error estimate.
class ContinuumReference {
 public:
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int k) const { return eigenvalues_.at(k - 1); }
  /// L2(D)-normalized eigenfunction phi^(k), multilinear interpolation on the
  /// fine grid in the numeric case.
  double eigenfunction(int k, std::span<const double> x) const;
  Profile eigenfunction_profile(int k) const;
  double fine_eps() const { return fine_eps_; }
  /// |lambda(fine) - lambda(fine/2)| per index; zero for the analytic path.
  const std::vector<double>& error_estimate() const { return error_estimate_; }
  bool analytic() const { return analytic_; }
  const ContinuumDomain& domain() const { return domain_; }

  friend ContinuumReference continuum_reference(const ContinuumDomain&, const Profile&,
                                                int, double, double);

 private:
  ContinuumDomain domain_;
  std::vector<double> eigenvalues_;
  std::vector<double> error_estimate_;
  double fine_eps_ = 0;
  bool analytic_ = false;
  // Analytic path: per-index box mode numbers.
  std::vector<std::vector<int>> modes_;
  // Numeric path: lattice + scaled eigenvectors.
  std::shared_ptr<LatticeDomain> grid_;
  Eigen::MatrixXd scaled_vectors_;  // fine_eps^{-d/2} g, sign-fixed
};

ContinuumReference continuum_reference(const ContinuumDomain& domain, const Profile& U,
                                       int k, double fine_eps, double tol = 1e-10);

/// Lambda_k = sum of the k smallest eigenvalues.
double kyfan_sum(const SpectrumResult& spectrum, int k);

/// sum_i <h_i, H h_i> over an orthonormal system; >= Lambda_k up to slack.
double rayleigh_sum(const SparseHamiltonian& H, const Eigen::MatrixXd& vectors,
                    double ortho_tol = 1e-8);

struct GapReport {
  double delta = 0;  // 1/3 min of the two adjacent gaps (upper only at k=1)
  bool simple = false;
};
GapReport gap_report(const SpectrumResult& spectrum, int k, double gap_tol);

/// Default near-degeneracy threshold, 1e-6 * (lambda^(k+1) + |lambda^(1)|).
double default_gap_tol(const SpectrumResult& spectrum, int k);

}  // namespace anderson
