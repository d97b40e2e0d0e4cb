#include "anderson/perturbation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "anderson/eigensolve.hpp"
#include "anderson/errors.hpp"
#include "anderson/hamiltonian.hpp"

namespace anderson {

namespace {

constexpr int kProbeLimit = 4096;  // correctness probes stay at dense scale

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full_spectrum(
    const LatticeDomain& lattice, std::span<const double> xi) {
  if (lattice.size() > kProbeLimit)
    throw TooLarge("perturbation: instance exceeds the dense probe limit");
  SparseHamiltonian H = assemble(lattice, xi);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense_oracle(H));
}

void require_simple(const Eigen::VectorXd& lambda, int k, const char* what) {
  int n = static_cast<int>(lambda.size());
  double tol = 1e-6 * (std::abs(lambda[std::min(k, n - 1)]) + std::abs(lambda[0]));
  if ((k > 1 && lambda[k - 1] - lambda[k - 2] <= tol) ||
      (k < n && lambda[k] - lambda[k - 1] <= tol))
    throw DegenerateEigenvalue(std::string(what) + ": eigenvalue k is not simple");
}

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Extended-precision eigenvalue of the shifted operator. The central
// difference cancels lambda down to ~2h g^2, which near an eigenfunction node
// is ~1e-12 |lambda|; double-precision backward error would swamp it.
long double lambda_at(const LatticeDomain& lattice, std::vector<double> xi, int k,
                      int site, double value) {
  xi[site] = value;
  SparseHamiltonian H = assemble(lattice, xi);
  MatrixXld A = dense_oracle(H).cast<long double>();
  Eigen::SelfAdjointEigenSolver<MatrixXld> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[k - 1];
}

}  // namespace

DerivativeCheck hadamard_derivative_check(const LatticeDomain& lattice,
                                          std::span<const double> xi, int k, int site,
                                          double h) {
  if (site < 0 || site >= lattice.size())
    throw std::invalid_argument("hadamard_derivative_check: site out of range");
  if (!(h > 0)) throw std::invalid_argument("hadamard_derivative_check: h must be > 0");
  auto es = full_spectrum(lattice, xi);
  require_simple(es.eigenvalues(), k, "hadamard_derivative_check");

  std::vector<double> base(xi.begin(), xi.end());
  long double lp = lambda_at(lattice, base, k, site, base[site] + h);
  long double lm = lambda_at(lattice, base, k, site, base[site] - h);

  DerivativeCheck out;
  out.fd = static_cast<double>((lp - lm) / (2.0L * h));
  double g = es.eigenvectors()(site, k - 1);
  out.analytic = g * g;
  out.rel_err = std::abs(out.fd - out.analytic) / std::max(std::abs(out.analytic), 1e-14);
  return out;
}

GreenDiag spectral_green_diag(const LatticeDomain& lattice, std::span<const double> xi,
                              int k, int site) {
  if (site < 0 || site >= lattice.size())
    throw std::invalid_argument("spectral_green_diag: site out of range");
  auto es = full_spectrum(lattice, xi);
  require_simple(es.eigenvalues(), k, "spectral_green_diag");
  GreenDiag out;
  out.k = k;
  out.site = site;
  double lambda_k = es.eigenvalues()[k - 1];
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (i == k - 1) continue;
    double g = es.eigenvectors()(site, i);
    out.value += g * g / (es.eigenvalues()[i] - lambda_k);
  }
  return out;
}

SecondVariationCheck second_variation_check(const LatticeDomain& lattice,
                                            std::span<const double> xi, int k, int site,
                                            double xi_from, double xi_to, int n_quad) {
  if (n_quad < 1) throw std::invalid_argument("second_variation_check: n_quad < 1");
  if (site < 0 || site >= lattice.size())
    throw std::invalid_argument("second_variation_check: site out of range");

  std::vector<double> base(xi.begin(), xi.end());
  auto eig_at = [&](double v) {
    std::vector<double> cfg = base;
    cfg[site] = v;
    return full_spectrum(lattice, cfg);
  };

  // Trapezoid quadrature of G^(k)(site,site; .) along the segment; simplicity
  // is checked at every node. First-order perturbation theory gives
  // d log|g(x)| / d xi(x) = -G(x,x), so the multiplier is exp(-integral).
  double integral = 0;
  double step = (xi_to - xi_from) / n_quad;
  for (int q = 0; q <= n_quad; ++q) {
    double v = xi_from + q * step;
    std::vector<double> cfg = base;
    cfg[site] = v;
    auto es = full_spectrum(lattice, cfg);
    try {
      require_simple(es.eigenvalues(), k, "second_variation_check");
    } catch (const DegenerateEigenvalue&) {
      throw DegeneracyOnPath("second_variation_check: degeneracy at a quadrature node");
    }
    double lambda_k = es.eigenvalues()[k - 1];
    double G = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      if (i == k - 1) continue;
      double g = es.eigenvectors()(site, i);
      G += g * g / (es.eigenvalues()[i] - lambda_k);
    }
    double w = (q == 0 || q == n_quad) ? 0.5 : 1.0;
    integral += w * G;
  }
  integral *= step;

  auto es_from = eig_at(xi_from);
  auto es_to = eig_at(xi_to);
  SecondVariationCheck out;
  out.lhs = std::abs(es_to.eigenvectors()(site, k - 1));
  out.rhs = std::abs(es_from.eigenvectors()(site, k - 1)) * std::exp(-integral);
  out.rel_err = std::abs(out.lhs - out.rhs) / std::max(std::abs(out.lhs), 1e-14);
  return out;
}

}  // namespace anderson
