#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "anderson/errors.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"
#include "anderson/rng.hpp"

using namespace anderson;

namespace {

std::vector<double> random_field(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xi(n);
  for (auto& v : xi) v = rng.standard_normal();
  return xi;
}

}  // namespace

TEST_CASE("assemble: single site, d=1, eps=0.5, xi=1") {
  auto lat = LatticeDomain::path(1, 0.5);
  std::vector<double> xi = {1.0};
  auto H = assemble(lat, xi);
  REQUIRE(H.dim == 1);
  CHECK(H.entry(0, 0) == doctest::Approx(9.0));  // 2 * 4 + 1
  CHECK(dense_oracle(H)(0, 0) == doctest::Approx(9.0));
}

TEST_CASE("assemble: 3-site path is the hand tridiagonal") {
  auto lat = LatticeDomain::path(3, 1.0);
  std::vector<double> xi(3, 0.0);
  auto H = assemble(lat, xi);
  auto dense = dense_oracle(H);
  Eigen::Matrix3d expect;
  expect << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  CHECK((dense - expect).norm() == doctest::Approx(0.0));
  CHECK(H.tridiagonal);
}

TEST_CASE("assemble: symmetry, sparsity bound, exact off-diagonals") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.07);
  auto xi = random_field(lat.size(), 17);
  auto H = assemble(lat, xi);
  double off = -1.0 / (0.07 * 0.07);
  for (int i = 0; i < H.dim; ++i) {
    int nnz = H.row_offsets[i + 1] - H.row_offsets[i];
    CHECK(nnz <= 2 * 2 + 1);
    for (int idx = H.row_offsets[i]; idx < H.row_offsets[i + 1]; ++idx) {
      int j = H.col_indices[idx];
      CHECK(H.entry(i, j) == H.entry(j, i));
      if (i != j) {
        CHECK(H.values[idx] == off);
        // Off-diagonals only between lattice-adjacent sites.
        int dist = 0;
        for (int a = 0; a < 2; ++a) dist += std::abs(lat.site(i)[a] - lat.site(j)[a]);
        CHECK(dist == 1);
      }
    }
    CHECK(H.entry(i, i) == doctest::Approx(2 * 2 / (0.07 * 0.07) + xi[i]));
  }
}

TEST_CASE("assemble rejects a mismatched sample") {
  auto lat = LatticeDomain::path(4, 0.5);
  PotentialSample s;
  s.eps = 0.25;  // wrong spacing
  s.values = {0, 0, 0, 0};
  CHECK_THROWS(assemble(lat, s));
  PotentialSample t;
  t.eps = 0.5;
  t.values = {0, 0};  // wrong length
  CHECK_THROWS(assemble(lat, t));
}

TEST_CASE("matvec matches the dense oracle column by column") {
  auto lat = LatticeDomain::path(3, 1.0);
  std::vector<double> xi = {0.3, -0.2, 0.9};
  auto H = assemble(lat, xi);
  auto dense = dense_oracle(H);
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e[i] = 1.0;
    CHECK((matvec(H, e) - dense.col(i)).norm() == doctest::Approx(0.0));
  }
  CHECK(matvec(H, Eigen::VectorXd::Zero(3)).norm() == 0.0);
}

TEST_CASE("matvec symmetry <u, Hv> = <Hu, v> on random vectors") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.1);
  auto xi = random_field(lat.size(), 23);
  auto H = assemble(lat, xi);
  Rng rng(29);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd u(H.dim), v(H.dim);
    for (int i = 0; i < H.dim; ++i) {
      u[i] = rng.standard_normal();
      v[i] = rng.standard_normal();
    }
    CHECK(u.dot(matvec(H, v)) == doctest::Approx(matvec(H, u).dot(v)).epsilon(1e-10));
  }
}

TEST_CASE("laplacian_apply: delta and constant inputs") {
  auto lat = LatticeDomain::path(7, 1.0);
  std::vector<double> f(7, 0.0);
  f[3] = 1.0;
  auto out = laplacian_apply(lat, f);
  CHECK(out[2] == 1.0);
  CHECK(out[3] == -2.0);
  CHECK(out[4] == 1.0);
  CHECK(out[0] == 0.0);

  std::vector<double> c(7, 2.0);
  auto flux = laplacian_apply(lat, c);
  for (int i = 1; i < 6; ++i) CHECK(flux[i] == 0.0);
  CHECK(flux[0] == -2.0);  // exterior neighbor contributes -f(x)
  CHECK(flux[6] == -2.0);
}

TEST_CASE("laplacian_apply: total mass equals minus the boundary flux") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.15);
  auto f = random_field(lat.size(), 31);
  auto out = laplacian_apply(lat, f);
  double total = 0;
  for (double v : out) total += v;
  // Interior bonds cancel pairwise; each bond leaving D_eps drops f(x).
  double flux = 0;
  for (int i = 0; i < lat.size(); ++i)
    for (int axis = 0; axis < 2; ++axis)
      for (int dir : {-1, +1})
        if (lat.neighbor(i, axis, dir) < 0) flux += f[i];
  CHECK(total == doctest::Approx(-flux).epsilon(1e-10));
}

TEST_CASE("dense_oracle guard") {
  auto lat = LatticeDomain::path(4097, 1.0);
  std::vector<double> xi(4097, 0.0);
  auto H = assemble(lat, xi);
  CHECK_THROWS_AS(dense_oracle(H), TooLarge);
}

TEST_CASE("quadratic form identity <f, Hf> = eps^-2 ||grad f||^2 + <xi, f^2>") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.12);
  auto xi = random_field(lat.size(), 37);
  auto H = assemble(lat, xi);
  Rng rng(41);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd f(H.dim);
    for (int i = 0; i < H.dim; ++i) f[i] = rng.standard_normal();
    double lhs = f.dot(matvec(H, f));
    std::vector<double> fv(f.data(), f.data() + f.size());
    CHECK(lhs == doctest::Approx(quadratic_form(lat, xi, fv)).epsilon(1e-10));
  }
}

TEST_CASE("nonnegative potential makes H positive definite") {
  auto lat = discretize(ContinuumDomain::unit_box(1), 0.05);
  auto xi = random_field(lat.size(), 43);
  for (auto& v : xi) v = std::abs(v);
  auto H = assemble(lat, xi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_oracle(H),
                                                    Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues()[0] > 0.0);
}

TEST_CASE("spectrum is invariant under simultaneous permutation") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.2);
  auto xi = random_field(lat.size(), 47);
  auto dense = dense_oracle(assemble(lat, xi));
  int n = dense.rows();
  // Random permutation similarity leaves the spectrum fixed.
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(53);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
  Eigen::MatrixXd permuted(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) permuted(i, j) = dense(perm[i], perm[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(dense, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> b(permuted, Eigen::EigenvaluesOnly);
  CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("coordinate dump round-trips") {
  auto lat = LatticeDomain::path(3, 0.5);
  std::vector<double> xi = {0.125, -2.0, 1.0 / 3.0};
  auto H = assemble(lat, xi);
  std::stringstream ss(coordinate_dump(H));
  int entries = 0;
  int row, col;
  double value;
  while (ss >> row >> col >> value) {
    CHECK(H.entry(row, col) == value);  // 17 digits survive the round trip
    ++entries;
  }
  CHECK(entries == static_cast<int>(H.values.size()));
}
