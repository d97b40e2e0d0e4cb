#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "anderson/eigensolve.hpp"
#include "anderson/errors.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"
#include "anderson/rng.hpp"

using namespace anderson;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_field(int n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> xi(n);
  for (auto& v : xi) v = scale * rng.standard_normal();
  return xi;
}

}  // namespace

TEST_CASE("3-site Dirichlet path: closed-form spectrum 2 - 2cos(n pi / 4)") {
  auto lat = LatticeDomain::path(3, 1.0);
  std::vector<double> xi(3, 0.0);
  auto spec = lowest_k(assemble(lat, xi), 3, 1e-12);
  CHECK(spec.eigenvalues[0] == doctest::Approx(2.0 - std::sqrt(2.0)));
  CHECK(spec.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(spec.eigenvalues[2] == doctest::Approx(2.0 + std::sqrt(2.0)));
  for (int i = 0; i < 3; ++i) CHECK(spec.residuals[i] <= 1e-10);
}

TEST_CASE("single site: eigenvalue is exactly the diagonal") {
  auto lat = LatticeDomain::path(1, 0.5);
  std::vector<double> xi = {-3.0};
  auto spec = lowest_k(assemble(lat, xi), 1, 1e-12);
  CHECK(spec.eigenvalues[0] == doctest::Approx(2.0 * 4.0 - 3.0));
}

TEST_CASE("orthonormality, residual and sign contracts") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.08);
  auto xi = random_field(lat.size(), 61);
  auto H = assemble(lat, xi);
  auto spec = lowest_k(H, 5, 1e-10);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(spec.eigenvectors.col(i).norm() - 1.0) <= 1e-12);
    for (int j = i + 1; j < 5; ++j)
      CHECK(std::abs(spec.eigenvectors.col(i).dot(spec.eigenvectors.col(j))) <= 1e-10);
    // Largest-magnitude entry is positive.
    int arg = 0;
    spec.eigenvectors.col(i).cwiseAbs().maxCoeff(&arg);
    CHECK(spec.eigenvectors(arg, i) > 0.0);
    double target = 1e-10 * (std::abs(spec.eigenvalues[i]) + H.row_norm_estimate());
    CHECK(spec.residuals[i] <= target);
  }
  for (int i = 0; i + 1 < 5; ++i)
    CHECK(spec.gaps[i] ==
          doctest::Approx(spec.eigenvalues[i + 1] - spec.eigenvalues[i]));
}

TEST_CASE("solves are bitwise reproducible") {
  auto lat = discretize(ContinuumDomain::unit_box(1), 0.02);
  auto xi = random_field(lat.size(), 67);
  auto H = assemble(lat, xi);
  auto a = lowest_k(H, 3, 1e-10);
  auto b = lowest_k(H, 3, 1e-10);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.eigenvectors == b.eigenvectors);
}

TEST_CASE("511-site path: Lanczos equals the dense oracle to 1e-9 relative") {
  auto lat = LatticeDomain::path(511, 1.0 / 512);
  std::vector<double> xi(511, 0.0);
  auto H = assemble(lat, xi);
  auto dense = lowest_k_values(H, 4, 1e-12, SolveMethod::Dense);
  auto lanczos = lowest_k_values(H, 4, 1e-11, SolveMethod::Lanczos);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(lanczos[i] - dense[i]) <= 1e-9 * std::abs(dense[i]));
}

TEST_CASE("oracle equivalence on random instances") {
  for (std::uint64_t seed : {71, 73, 79}) {
    auto lat = discretize(ContinuumDomain::unit_box(2), 0.045);  // ~400 sites
    auto xi = random_field(lat.size(), seed, 5.0);
    auto H = assemble(lat, xi);
    auto dense = lowest_k_values(H, 3, 1e-12, SolveMethod::Dense);
    auto lanczos = lowest_k_values(H, 3, 1e-10, SolveMethod::Lanczos);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(lanczos[i] - dense[i]) <=
            1e-8 * std::max(1.0, std::abs(dense[i])));
  }
}

TEST_CASE("interlacing: adding |eta| never lowers an eigenvalue") {
  auto lat = discretize(ContinuumDomain::unit_box(1), 0.04);
  auto xi = random_field(lat.size(), 83);
  auto eta = random_field(lat.size(), 89);
  auto bumped = xi;
  for (int i = 0; i < lat.size(); ++i) bumped[i] += std::abs(eta[i]);
  auto base = lowest_k_values(assemble(lat, xi), 4, 1e-12);
  auto shifted = lowest_k_values(assemble(lat, bumped), 4, 1e-12);
  for (int i = 0; i < 4; ++i) CHECK(shifted[i] >= base[i] - 1e-10);
}

TEST_CASE("continuum reference: analytic box spectra") {
  auto ref1 = continuum_reference(ContinuumDomain::unit_box(1), nullptr, 2, 1.0 / 64);
  CHECK(ref1.analytic());
  CHECK(ref1.eigenvalue(1) == doctest::Approx(kPi * kPi));
  CHECK(ref1.eigenvalue(2) == doctest::Approx(4.0 * kPi * kPi));

  auto ref2 = continuum_reference(ContinuumDomain::unit_box(2), nullptr, 1, 1.0 / 32);
  CHECK(ref2.eigenvalue(1) == doctest::Approx(2.0 * kPi * kPi));

  // L2 normalization of the eigenfunctions under fine-grid quadrature.
  auto grid = discretize(ContinuumDomain::unit_box(1), 1.0 / 512);
  double mass = 0;
  for (int i = 0; i < grid.size(); ++i) {
    double phi = ref1.eigenfunction(1, grid.position(i));
    mass += phi * phi;
  }
  mass /= 512.0;
  CHECK(std::abs(mass - 1.0) <= 1e-4);
}

TEST_CASE("continuum reference: constant U shifts the spectrum exactly") {
  auto D = ContinuumDomain::unit_box(1);
  // Explicit profiles force the numeric path on both sides.
  auto base = continuum_reference(D, constant_profile(0.0), 3, 1.0 / 128);
  auto shifted = continuum_reference(D, constant_profile(5.0), 3, 1.0 / 128);
  CHECK_FALSE(base.analytic());
  for (int k = 1; k <= 3; ++k)
    CHECK(shifted.eigenvalue(k) == doctest::Approx(base.eigenvalue(k) + 5.0).epsilon(1e-9));
}

TEST_CASE("continuum reference: numeric path approaches the analytic one") {
  auto D = ContinuumDomain::unit_box(1);
  auto ref = continuum_reference(D, constant_profile(0.0), 1, 1.0 / 512);
  CHECK(std::abs(ref.eigenvalue(1) - kPi * kPi) <= 0.1);
  CHECK(ref.error_estimate()[0] > 0.0);
  CHECK(ref.error_estimate()[0] <= 0.1);
}

TEST_CASE("kyfan_sum examples") {
  auto lat = LatticeDomain::path(3, 1.0);
  std::vector<double> xi(3, 0.0);
  auto spec = lowest_k(assemble(lat, xi), 3, 1e-12);
  CHECK(kyfan_sum(spec, 1) == doctest::Approx(spec.eigenvalues[0]));
  CHECK(kyfan_sum(spec, 3) == doctest::Approx(6.0));  // trace of the tridiagonal
  CHECK(kyfan_sum(spec, 3) - kyfan_sum(spec, 2) ==
        doctest::Approx(spec.eigenvalues[2]));
  CHECK_THROWS(kyfan_sum(spec, 4));
  CHECK_THROWS(kyfan_sum(spec, 0));
}

TEST_CASE("rayleigh_sum: minimizers, delta vectors, random frames") {
  auto lat = discretize(ContinuumDomain::unit_box(1), 0.02);
  auto xi = random_field(lat.size(), 97);
  auto H = assemble(lat, xi);
  auto spec = lowest_k(H, 3, 1e-12);
  double lambda3 = kyfan_sum(spec, 3);
  CHECK(rayleigh_sum(H, spec.eigenvectors.leftCols(3)) ==
        doctest::Approx(lambda3).epsilon(1e-9));

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(H.dim, 1);
  delta(7, 0) = 1.0;
  CHECK(rayleigh_sum(H, delta) == doctest::Approx(H.entry(7, 7)));
  CHECK(rayleigh_sum(H, delta) >= spec.eigenvalues[0]);

  Rng rng(101);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd G(H.dim, 3);
    for (int i = 0; i < H.dim; ++i)
      for (int j = 0; j < 3; ++j) G(i, j) = rng.standard_normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(H.dim, 3);
    CHECK(rayleigh_sum(H, Q) >= lambda3 - 1e-9);
  }

  Eigen::MatrixXd skew = Eigen::MatrixXd::Ones(H.dim, 2);
  CHECK_THROWS(rayleigh_sum(H, skew));
}

TEST_CASE("gap_report: path spectrum and degenerate pairs") {
  auto lat = LatticeDomain::path(3, 1.0);
  std::vector<double> xi(3, 0.0);
  auto spec = lowest_k(assemble(lat, xi), 3, 1e-12);
  auto rep = gap_report(spec, 2, 1e-8);
  CHECK(rep.delta == doctest::Approx(std::sqrt(2.0) / 3.0));
  CHECK(rep.simple);

  // k=1 only uses the upper gap and needs 2 pairs.
  auto rep1 = gap_report(spec, 1, 1e-8);
  CHECK(rep1.delta == doctest::Approx(std::sqrt(2.0) / 3.0));
  CHECK_THROWS(gap_report(spec, 3, 1e-8));

  // The symmetric square has a doubly degenerate second eigenvalue.
  auto square = discretize(ContinuumDomain::unit_box(2), 0.2);
  std::vector<double> zero(square.size(), 0.0);
  auto sq = lowest_k(assemble(square, zero), 4, 1e-12);
  auto degenerate = gap_report(sq, 2, default_gap_tol(sq, 2));
  CHECK(degenerate.delta <= 1e-10);
  CHECK_FALSE(degenerate.simple);
  CHECK_FALSE(sq.simple_flags[1]);
}
