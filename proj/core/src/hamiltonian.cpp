#include "anderson/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "anderson/errors.hpp"

namespace anderson {

double SparseHamiltonian::entry(int i, int j) const {
  for (int p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
    if (col_indices[p] == j) return values[p];
  return 0.0;
}

double SparseHamiltonian::row_norm_estimate() const {
  double m = 0;
  for (int i = 0; i < dim; ++i) {
    double s = 0;
    for (int p = row_offsets[i]; p < row_offsets[i + 1]; ++p) s += std::abs(values[p]);
    m = std::max(m, s);
  }
  return m;
}

SparseHamiltonian assemble(const LatticeDomain& lattice, const PotentialSample& potential) {
  if (static_cast<int>(potential.values.size()) != lattice.size() ||
      potential.eps != lattice.eps())
    throw std::invalid_argument("assemble: potential sampled on a different lattice");
  return assemble(lattice, potential.values);
}

SparseHamiltonian assemble(const LatticeDomain& lattice, std::span<const double> xi) {
  if (static_cast<int>(xi.size()) != lattice.size())
    throw std::invalid_argument("assemble: xi length does not match lattice");
  const int n = lattice.size();
  const int d = lattice.dim();
  const double eps = lattice.eps();
  const double hop = -1.0 / (eps * eps);
  const double diag_free = 2.0 * d / (eps * eps);

  SparseHamiltonian H;
  H.dim = n;
  H.eps = eps;
  H.lattice_dim = d;
  H.tridiagonal = lattice.is_contiguous_path();
  H.row_offsets.reserve(n + 1);
  H.row_offsets.push_back(0);
  H.col_indices.reserve(static_cast<std::size_t>(n) * (2 * d + 1));
  H.values.reserve(H.col_indices.capacity());
  H.diagonal.resize(n);

  std::vector<int> cols;
  for (int i = 0; i < n; ++i) {
    cols.clear();
    for (int a = 0; a < d; ++a)
      for (int dir : {-1, +1}) {
        int j = lattice.neighbor(i, a, dir);
        if (j >= 0) cols.push_back(j);
      }
    cols.push_back(i);
    std::sort(cols.begin(), cols.end());
    for (int j : cols) {
      H.col_indices.push_back(j);
      if (j == i) {
        H.diagonal[i] = diag_free + xi[i];
        H.values.push_back(H.diagonal[i]);
      } else {
        H.values.push_back(hop);
      }
    }
    H.row_offsets.push_back(static_cast<int>(H.col_indices.size()));
  }
  return H;
}

Eigen::VectorXd matvec(const SparseHamiltonian& H, const Eigen::VectorXd& v) {
  if (v.size() != H.dim) throw std::invalid_argument("matvec: dimension mismatch");
  Eigen::VectorXd out(H.dim);
  for (int i = 0; i < H.dim; ++i) {
    double s = 0;
    for (int p = H.row_offsets[i]; p < H.row_offsets[i + 1]; ++p)
      s += H.values[p] * v[H.col_indices[p]];
    out[i] = s;
  }
  return out;
}

std::vector<double> laplacian_apply(const LatticeDomain& lattice,
                                    std::span<const double> f) {
  if (static_cast<int>(f.size()) != lattice.size())
    throw std::invalid_argument("laplacian_apply: length mismatch");
  const int d = lattice.dim();
  std::vector<double> out(f.size());
  for (int i = 0; i < lattice.size(); ++i) {
    double s = -2.0 * d * f[i];
    for (int a = 0; a < d; ++a)
      for (int dir : {-1, +1}) {
        int j = lattice.neighbor(i, a, dir);
        if (j >= 0) s += f[j];
      }
    out[i] = s;
  }
  return out;
}

Eigen::MatrixXd dense_oracle(const SparseHamiltonian& H) {
  if (H.dim > 4096) throw TooLarge("dense_oracle: dim > 4096");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(H.dim, H.dim);
  for (int i = 0; i < H.dim; ++i)
    for (int p = H.row_offsets[i]; p < H.row_offsets[i + 1]; ++p)
      M(i, H.col_indices[p]) = H.values[p];
  return M;
}

double quadratic_form(const LatticeDomain& lattice, std::span<const double> xi,
                      std::span<const double> f) {
  if (f.size() != xi.size() || static_cast<int>(f.size()) != lattice.size())
    throw std::invalid_argument("quadratic_form: length mismatch");
  const int d = lattice.dim();
  const double eps = lattice.eps();
  double grad2 = 0;
  for (int i = 0; i < lattice.size(); ++i) {
    for (int a = 0; a < d; ++a) {
      // Forward difference f(x + e_a) - f(x); exterior sites carry zero and
      // their own forward bonds into the domain are counted from outside.
      int jf = lattice.neighbor(i, a, +1);
      double df = (jf >= 0 ? f[jf] : 0.0) - f[i];
      grad2 += df * df;
      int jb = lattice.neighbor(i, a, -1);
      if (jb < 0) grad2 += f[i] * f[i];  // bond from the exterior site x - e_a
    }
  }
  double pot = 0;
  for (std::size_t i = 0; i < f.size(); ++i) pot += xi[i] * f[i] * f[i];
  return grad2 / (eps * eps) + pot;
}

std::string coordinate_dump(const SparseHamiltonian& H) {
  std::string out;
  char buf[96];
  for (int i = 0; i < H.dim; ++i)
    for (int p = H.row_offsets[i]; p < H.row_offsets[i + 1]; ++p) {
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", i, H.col_indices[p], H.values[p]);
      out += buf;
    }
  return out;
}

}  // namespace anderson
