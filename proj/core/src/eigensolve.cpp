#include "anderson/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "anderson/errors.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

// Largest-magnitude entry made positive; ties broken by lowest index.
void sign_fix(Eigen::Ref<Eigen::VectorXd> v) {
  int best = 0;
  double mag = std::abs(v[0]);
  for (int i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > mag) {
      mag = std::abs(v[i]);
      best = i;
    }
  }
  if (v[best] < 0) v = -v;
}

std::vector<bool> simple_flags_from(const Eigen::VectorXd& lambda, int k,
                                    double gap_tol) {
  std::vector<bool> flags(k, true);
  for (int i = 0; i < k; ++i) {
    if (i > 0 && lambda[i] - lambda[i - 1] <= gap_tol) flags[i] = false;
    if (i + 1 < lambda.size() && lambda[i + 1] - lambda[i] <= gap_tol) flags[i] = false;
  }
  return flags;
}

SpectrumResult finalize(const SparseHamiltonian& H, const Eigen::VectorXd& lambda_ext,
                        const Eigen::MatrixXd& vectors, int k) {
  SpectrumResult out;
  out.eigenvalues = lambda_ext.head(k);
  out.eigenvectors = vectors.leftCols(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd col = out.eigenvectors.col(j);
    col.normalize();
    sign_fix(col);
    out.eigenvectors.col(j) = col;
  }
  out.residuals.resize(k);
  for (int j = 0; j < k; ++j)
    out.residuals[j] =
        (matvec(H, out.eigenvectors.col(j)) - out.eigenvalues[j] * out.eigenvectors.col(j))
            .norm();
  out.gaps.resize(std::max(0, k - 1));
  for (int j = 0; j + 1 < k; ++j) out.gaps[j] = out.eigenvalues[j + 1] - out.eigenvalues[j];
  double tol = 1e-6 * (std::abs(lambda_ext[std::min<int>(k, lambda_ext.size() - 1)]) +
                       std::abs(lambda_ext[0]));
  out.simple_flags = simple_flags_from(lambda_ext, k, tol);
  return out;
}

// Dense eigendecomposition of the lowest k_ext pairs (k_ext = k+1 when
// available, to support gap flags).
void dense_solve(const SparseHamiltonian& H, int k_ext, bool want_vectors,
                 Eigen::VectorXd& lambda, Eigen::MatrixXd& vectors) {
  if (H.tridiagonal) {
    Eigen::VectorXd diag(H.dim), sub(std::max(0, H.dim - 1));
    for (int i = 0; i < H.dim; ++i) diag[i] = H.diagonal[i];
    double hop = -1.0 / (H.eps * H.eps);
    sub.setConstant(hop);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub,
                              want_vectors ? Eigen::ComputeEigenvectors
                                           : Eigen::EigenvaluesOnly);
    lambda = es.eigenvalues().head(k_ext);
    if (want_vectors) vectors = es.eigenvectors().leftCols(k_ext);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      dense_oracle(H),
      want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  lambda = es.eigenvalues().head(k_ext);
  if (want_vectors) vectors = es.eigenvectors().leftCols(k_ext);
}

// Thick-restart Lanczos with full (two-pass) reorthogonalization. The
// projected matrix T = V^T H V is kept explicitly, so restarts that break the
// tridiagonal structure need no special casing.
struct LanczosResult {
  Eigen::VectorXd lambda;   // k_ext values
  Eigen::MatrixXd vectors;  // k columns
};

LanczosResult lanczos_lowest(const SparseHamiltonian& H, int k, int k_ext, double tol) {
  const int n = H.dim;
  const int m_max = std::min(n, std::max(2 * k_ext + 40, 80));
  const int l_keep = std::min(k_ext + 8, m_max - 4);
  const double target_scale = H.row_norm_estimate();
  const int max_restarts = 400;

  Eigen::MatrixXd V(n, m_max + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m_max + 1, m_max + 1);

  // Deterministic pseudo-random start.
  {
    Eigen::VectorXd v0(n);
    for (int i = 0; i < n; ++i) {
      Rng rng(mix_keys(0xa11ce5eedULL, static_cast<std::uint64_t>(i)));
      v0[i] = 2.0 * rng.uniform01() - 1.0;
    }
    v0.normalize();
    V.col(0) = v0;
  }

  int j = 0;           // columns whose H-action has been processed
  int basis = 1;       // columns present in V
  std::vector<double> best_res(k, std::numeric_limits<double>::infinity());

  for (int restart = 0; restart <= max_restarts; ++restart) {
    while (j < m_max) {
      Eigen::VectorXd w = matvec(H, V.col(j));
      // Two-pass modified Gram-Schmidt; accumulated coefficients give
      // T(i, j) = v_i^T H v_j.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i < basis; ++i) {
          double c = V.col(i).dot(w);
          w -= c * V.col(i);
          T(i, j) += c;
          if (i != j) T(j, i) = T(i, j);
        }
      }
      double beta = w.norm();
      ++j;
      if (beta < 1e-13 * std::max(1.0, target_scale)) {
        // Breakdown: the basis spans an invariant subspace. Expand with a
        // fresh orthogonalized direction so the iteration can continue.
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i)
          v[i] = 2.0 * Rng(mix_keys(0xdeadbeefULL + restart * 1000 + j, i)).uniform01() -
                 1.0;
        for (int pass = 0; pass < 2; ++pass)
          for (int i = 0; i < j; ++i) v -= V.col(i).dot(v) * V.col(i);
        double vn = v.norm();
        if (vn < 1e-10) {
          // Full space exhausted; Ritz pairs are exact.
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
              0.5 * (T.topLeftCorner(j, j) + T.topLeftCorner(j, j).transpose()));
          LanczosResult out;
          out.lambda = es.eigenvalues().head(std::min(k_ext, j));
          out.vectors = V.leftCols(j) * es.eigenvectors().leftCols(std::min(k, j));
          return out;
        }
        V.col(j) = v / vn;
      } else {
        V.col(j) = w / beta;
      }
      basis = j + 1;

      // Periodic convergence probe once the space can hold the answer.
      if (j >= k_ext + 2 && (j % 10 == 0 || j == m_max)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            0.5 * (T.topLeftCorner(j, j) + T.topLeftCorner(j, j).transpose()));
        bool all_ok = true;
        for (int idx = 0; idx < k && all_ok; ++idx) {
          Eigen::VectorXd y = V.leftCols(j) * es.eigenvectors().col(idx);
          double theta = es.eigenvalues()[idx];
          double res = (matvec(H, y) - theta * y).norm();
          best_res[idx] = std::min(best_res[idx], res);
          if (res > tol * (std::abs(theta) + target_scale)) all_ok = false;
        }
        if (all_ok) {
          LanczosResult out;
          out.lambda = es.eigenvalues().head(std::min(k_ext, j));
          out.vectors = V.leftCols(j) * es.eigenvectors().leftCols(k);
          return out;
        }
      }
    }

    // Thick restart: keep l_keep Ritz vectors plus the residual direction.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (T.topLeftCorner(j, j) + T.topLeftCorner(j, j).transpose()));
    int l = std::min(l_keep, j - 1);
    Eigen::MatrixXd Y = V.leftCols(j) * es.eigenvectors().leftCols(l);
    Eigen::VectorXd resid_dir = V.col(j);
    V.leftCols(l) = Y;
    // Re-orthogonalize the carried direction against the kept Ritz vectors;
    // replace it when it has no new content.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < l; ++i) resid_dir -= V.col(i).dot(resid_dir) * V.col(i);
    double rn = resid_dir.norm();
    if (rn < 1e-10) {
      for (int i = 0; i < n; ++i)
        resid_dir[i] =
            2.0 * Rng(mix_keys(0xfeedf00dULL + restart, i)).uniform01() - 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < l; ++i) resid_dir -= V.col(i).dot(resid_dir) * V.col(i);
      rn = resid_dir.norm();
    }
    V.col(l) = resid_dir / rn;
    T.setZero();
    for (int i = 0; i < l; ++i) T(i, i) = es.eigenvalues()[i];
    j = l;       // next H-action processes the residual column
    basis = l + 1;
  }
  throw NoConvergence("lanczos_lowest: no convergence after max restarts", best_res);
}

}  // namespace

SpectrumResult lowest_k(const SparseHamiltonian& H, int k, double tol,
                        SolveMethod method) {
  if (k < 1 || k > H.dim) throw std::invalid_argument("lowest_k: k out of range");
  if (!(tol > 0)) throw std::invalid_argument("lowest_k: tol must be positive");
  if (method == SolveMethod::Auto)
    method = H.dim <= kDenseThreshold ? SolveMethod::Dense : SolveMethod::Lanczos;
  int k_ext = std::min(k + 1, H.dim);
  if (method == SolveMethod::Dense) {
    Eigen::VectorXd lambda;
    Eigen::MatrixXd vectors;
    dense_solve(H, k_ext, true, lambda, vectors);
    return finalize(H, lambda, vectors, k);
  }
  LanczosResult lr = lanczos_lowest(H, k, k_ext, tol);
  return finalize(H, lr.lambda, lr.vectors, k);
}

Eigen::VectorXd lowest_k_values(const SparseHamiltonian& H, int k, double tol,
                                SolveMethod method) {
  if (k < 1 || k > H.dim) throw std::invalid_argument("lowest_k_values: k out of range");
  if (method == SolveMethod::Auto)
    method = H.dim <= kDenseThreshold ? SolveMethod::Dense : SolveMethod::Lanczos;
  if (method == SolveMethod::Dense) {
    Eigen::VectorXd lambda;
    Eigen::MatrixXd vectors;
    dense_solve(H, k, false, lambda, vectors);
    return lambda;
  }
  LanczosResult lr = lanczos_lowest(H, k, std::min(k + 1, H.dim), tol);
  return lr.lambda.head(k);
}

double ContinuumReference::eigenfunction(int k, std::span<const double> x) const {
  if (k < 1 || k > static_cast<int>(eigenvalues_.size()))
    throw std::invalid_argument("eigenfunction: index out of range");
  int d = domain_.dim;
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("eigenfunction: dimension mismatch");
  if (analytic_) {
    const auto& n = modes_[k - 1];
    double phi = 1.0;
    for (int a = 0; a < d; ++a) {
      auto [lo, hi] = domain_.intervals[a];
      double len = hi - lo;
      if (x[a] <= lo || x[a] >= hi) return 0.0;
      phi *= std::sqrt(2.0 / len) *
             std::sin(n[a] * std::numbers::pi * (x[a] - lo) / len);
    }
    return phi;
  }
  // Multilinear interpolation of the scaled discrete eigenfunction.
  double h = fine_eps_;
  std::vector<int> base(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) {
    double u = x[a] / h;
    base[a] = static_cast<int>(std::floor(u));
    frac[a] = u - base[a];
  }
  double val = 0;
  std::vector<int> corner(d);
  for (int m = 0; m < (1 << d); ++m) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      int bit = (m >> a) & 1;
      corner[a] = base[a] + bit;
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    if (w == 0.0) continue;
    int idx = grid_->index_of(corner);
    if (idx >= 0) val += w * scaled_vectors_(idx, k - 1);
  }
  return val;
}

Profile ContinuumReference::eigenfunction_profile(int k) const {
  // Copy-capture keeps the profile valid past this object's lifetime where
  // the numeric grid is shared.
  ContinuumReference self = *this;
  return [self, k](std::span<const double> x) { return self.eigenfunction(k, x); };
}

ContinuumReference continuum_reference(const ContinuumDomain& domain, const Profile& U,
                                       int k, double fine_eps, double tol) {
  if (k < 1) throw std::invalid_argument("continuum_reference: k must be >= 1");
  if (!(fine_eps > 0))
    throw std::invalid_argument("continuum_reference: fine_eps must be positive");
  ContinuumReference ref;
  ref.domain_ = domain;
  ref.fine_eps_ = fine_eps;

  if (domain.kind == ContinuumDomain::Kind::Box && !U) {
    // Analytic Dirichlet box spectrum pi^2 sum (n_i / l_i)^2.
    ref.analytic_ = true;
    int d = domain.dim;
    int M = k + 2;
    std::vector<std::pair<double, std::vector<int>>> modes;
    std::vector<int> n(d, 1);
    while (true) {
      double lam = 0;
      for (int a = 0; a < d; ++a) {
        double len = domain.intervals[a].second - domain.intervals[a].first;
        lam += (n[a] * n[a]) / (len * len);
      }
      modes.emplace_back(lam * std::numbers::pi * std::numbers::pi, n);
      int a = d - 1;
      while (a >= 0) {
        if (++n[a] <= M) break;
        n[a] = 1;
        --a;
      }
      if (a < 0) break;
    }
    std::stable_sort(modes.begin(), modes.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    int take = std::min<int>(k + 1, modes.size());
    for (int i = 0; i < take; ++i) {
      ref.eigenvalues_.push_back(modes[i].first);
      ref.modes_.push_back(modes[i].second);
      ref.error_estimate_.push_back(0.0);
    }
    return ref;
  }

  // Deterministic discrete problem at fine_eps, plus a fine_eps/2 solve for
  // the two-grid error estimate.
  Profile Ueff = U ? U : constant_profile(0.0);
  auto grid = std::make_shared<LatticeDomain>(discretize(domain, fine_eps));
  auto xi = sample_profile(Ueff, *grid);
  SparseHamiltonian H = assemble(*grid, xi);
  int k_ext = std::min(k + 1, H.dim);
  SpectrumResult spec = lowest_k(H, k_ext, tol);

  auto grid_half = discretize(domain, fine_eps / 2);
  auto xi_half = sample_profile(Ueff, grid_half);
  SparseHamiltonian H_half = assemble(grid_half, xi_half);
  Eigen::VectorXd lam_half = lowest_k_values(H_half, std::min(k_ext, H_half.dim), tol);

  ref.analytic_ = false;
  ref.grid_ = grid;
  int d = domain.dim;
  ref.scaled_vectors_ = spec.eigenvectors * std::pow(fine_eps, -d / 2.0);
  for (int i = 0; i < k_ext; ++i) {
    ref.eigenvalues_.push_back(spec.eigenvalues[i]);
    ref.error_estimate_.push_back(
        i < lam_half.size() ? std::abs(spec.eigenvalues[i] - lam_half[i]) : 0.0);
  }
  return ref;
}

double kyfan_sum(const SpectrumResult& spectrum, int k) {
  if (k < 1 || k > spectrum.eigenvalues.size())
    throw std::invalid_argument("kyfan_sum: k out of range");
  return spectrum.eigenvalues.head(k).sum();
}

double rayleigh_sum(const SparseHamiltonian& H, const Eigen::MatrixXd& vectors,
                    double ortho_tol) {
  if (vectors.rows() != H.dim)
    throw std::invalid_argument("rayleigh_sum: dimension mismatch");
  Eigen::MatrixXd G = vectors.transpose() * vectors;
  G -= Eigen::MatrixXd::Identity(G.rows(), G.cols());
  if (G.cwiseAbs().maxCoeff() > ortho_tol)
    throw std::invalid_argument("rayleigh_sum: input is not orthonormal");
  double s = 0;
  for (int j = 0; j < vectors.cols(); ++j)
    s += vectors.col(j).dot(matvec(H, vectors.col(j)));
  return s;
}

GapReport gap_report(const SpectrumResult& spectrum, int k, double gap_tol) {
  if (k < 1) throw std::invalid_argument("gap_report: k must be >= 1");
  if (spectrum.eigenvalues.size() < k + 1)
    throw std::invalid_argument("gap_report: need k+1 eigenpairs");
  double upper = spectrum.eigenvalues[k] - spectrum.eigenvalues[k - 1];
  double delta;
  if (k == 1) {
    delta = upper / 3.0;
  } else {
    double lower = spectrum.eigenvalues[k - 1] - spectrum.eigenvalues[k - 2];
    delta = std::min(lower, upper) / 3.0;
  }
  return {delta, delta > gap_tol};
}

double default_gap_tol(const SpectrumResult& spectrum, int k) {
  int hi = std::min<int>(k, spectrum.eigenvalues.size() - 1);
  return 1e-6 * (std::abs(spectrum.eigenvalues[hi]) + std::abs(spectrum.eigenvalues[0]));
}

}  // namespace anderson
