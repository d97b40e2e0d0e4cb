#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "anderson/errors.hpp"
#include "anderson/lattice.hpp"
#include "anderson/rng.hpp"

using namespace anderson;

namespace {

// Independent enumeration oracle: scan a bounding box of integer sites and
// keep x whenever all 2^d corners of the closed linf-ball of radius eps
// around eps*x lie in the open set D.
std::vector<std::vector<int>> enumerate_sites(const ContinuumDomain& D, double eps) {
  int d = D.dim;
  double reach = 0;
  if (D.kind == ContinuumDomain::Kind::Box) {
    for (auto [lo, hi] : D.intervals) reach = std::max(reach, std::max(std::abs(lo), std::abs(hi)));
  } else {
    for (double c : D.center) reach = std::max(reach, std::abs(c) + D.radius);
  }
  int bound = static_cast<int>(std::ceil(reach / eps)) + 2;
  std::vector<std::vector<int>> out;
  std::vector<int> x(d, -bound);
  while (true) {
    bool ok = true;
    for (int corner = 0; corner < (1 << d) && ok; ++corner) {
      std::vector<double> p(d);
      for (int a = 0; a < d; ++a)
        p[a] = eps * x[a] + ((corner >> a) & 1 ? eps : -eps);
      ok = D.contains(p);
    }
    if (ok) out.push_back(x);
    int a = d - 1;
    while (a >= 0 && x[a] == bound) x[a--] = -bound;
    if (a < 0) break;
    ++x[a];
  }
  return out;
}

}  // namespace

TEST_CASE("discretize: unit interval examples") {
  auto D = ContinuumDomain::unit_box(1);
  auto lat = discretize(D, 0.25);
  REQUIRE(lat.size() == 1);
  CHECK(lat.site(0) == std::vector<int>{2});

  auto lat2 = discretize(D, 0.1);
  REQUIRE(lat2.size() == 7);
  for (int i = 0; i < 7; ++i) CHECK(lat2.site(i) == std::vector<int>{2 + i});
}

TEST_CASE("discretize: unit square") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.1);
  CHECK(lat.size() == 49);
  for (const auto& s : lat.sites()) {
    CHECK(s[0] >= 2);
    CHECK(s[0] <= 8);
    CHECK(s[1] >= 2);
    CHECK(s[1] <= 8);
  }
}

TEST_CASE("discretize matches the enumeration oracle") {
  std::vector<std::pair<ContinuumDomain, double>> cases = {
      {ContinuumDomain::box({{-0.3, 1.7}}), 0.13},
      {ContinuumDomain::box({{0, 1}, {-1, 0.5}}), 0.11},
      {ContinuumDomain::ball({0.0, 0.0}, 1.0), 0.17},
      {ContinuumDomain::ball({0.5}, 0.9), 0.08},
  };
  for (const auto& [D, eps] : cases) {
    auto lat = discretize(D, eps);
    auto oracle = enumerate_sites(D, eps);
    REQUIRE(lat.size() == static_cast<int>(oracle.size()));
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(lat.site(i) == oracle[i]);
  }
}

TEST_CASE("discretize: empty lattice raises") {
  CHECK_THROWS_AS(discretize(ContinuumDomain::unit_box(1), 0.5), EmptyLattice);
  CHECK_THROWS_AS(discretize(ContinuumDomain::ball({0.0}, 0.1), 0.2), EmptyLattice);
}

TEST_CASE("index_of inverts the site list; neighbors respect the boundary") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.2);
  for (int i = 0; i < lat.size(); ++i) CHECK(lat.index_of(lat.site(i)) == i);
  CHECK(lat.index_of({100, 100}) == -1);

  for (int i = 0; i < lat.size(); ++i)
    for (int axis = 0; axis < 2; ++axis)
      for (int dir : {-1, +1}) {
        auto expect = lat.site(i);
        expect[axis] += dir;
        int j = lat.neighbor(i, axis, dir);
        if (j >= 0)
          CHECK(lat.site(j) == expect);
        else
          CHECK(lat.index_of(expect) == -1);
      }
}

TEST_CASE("coverage refinement down the eps ladder") {
  auto D = ContinuumDomain::unit_box(2);
  double eps = 0.11, eps2 = 0.04;
  auto coarse = discretize(D, eps);
  auto fine = discretize(D, eps2);
  for (int i = 0; i < coarse.size(); ++i) {
    auto p = coarse.position(i);
    double best = 1e300;
    for (int j = 0; j < fine.size(); ++j) {
      auto q = fine.position(j);
      double dist = 0;
      for (int a = 0; a < 2; ++a) dist = std::max(dist, std::abs(p[a] - q[a]));
      best = std::min(best, dist);
    }
    CHECK(best <= eps);
  }
}

TEST_CASE("volume convergence |D_eps| eps^d -> |D|") {
  double prev = 0;
  for (double eps : {0.1, 0.05, 0.02, 0.01}) {
    auto lat = discretize(ContinuumDomain::unit_box(1), eps);
    double measure = lat.size() * eps;
    CHECK(measure >= 0.5);
    CHECK(measure <= 1.0);
    CHECK(measure >= prev);
    prev = measure;
  }
  CHECK(prev > 0.9);

  prev = 0;
  for (double eps : {0.1, 0.05, 0.02, 0.01}) {
    auto lat = discretize(ContinuumDomain::unit_box(2), eps);
    double measure = lat.size() * eps * eps;
    CHECK(measure <= 1.0);
    CHECK(measure >= prev);
    prev = measure;
  }
  CHECK(prev > 0.9);
}

TEST_CASE("scaled_norm examples") {
  std::vector<double> ones(7, 1.0);
  CHECK(scaled_norm(ones, 0.1, 1, 1.0) == doctest::Approx(0.7));
  CHECK(scaled_norm(ones, 0.1, 1, 2.0) == doctest::Approx(std::sqrt(0.7)));
  CHECK(scaled_norm(ones, 0.1, 1, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(1.0));
  std::vector<double> zero(7, 0.0);
  for (double p : {1.0, 2.0, 3.5}) CHECK(scaled_norm(zero, 0.1, 1, p) == 0.0);
  CHECK_THROWS(scaled_norm(ones, 0.1, 1, 0.5));
}

TEST_CASE("scaled_inner examples and the p=2 identity") {
  std::vector<double> ones(7, 1.0);
  CHECK(scaled_inner(ones, ones, 0.1, 1) == doctest::Approx(0.7));

  std::vector<double> e0(4, 0.0), e1(4, 0.0);
  e0[0] = 1;
  e1[1] = 1;
  CHECK(scaled_inner(e0, e1, 0.3, 2) == 0.0);

  Rng rng(11);
  std::vector<double> f(31);
  for (auto& v : f) v = rng.standard_normal();
  double n2 = scaled_norm(f, 0.07, 1, 2.0);
  CHECK(scaled_inner(f, f, 0.07, 1) == doctest::Approx(n2 * n2));

  std::vector<double> short_vec(3, 1.0);
  CHECK_THROWS(scaled_inner(ones, short_vec, 0.1, 1));
}

TEST_CASE("block_average examples") {
  std::vector<std::vector<int>> sites = {{0}, {1}, {2}, {3}};
  std::vector<double> f = {1, 3, 2, 4};
  auto avg = block_average(sites, f, 1, 2);
  REQUIRE(avg.values.size() == 4);
  CHECK(avg.values == std::vector<double>{2, 2, 3, 3});

  auto ident = block_average(sites, f, 1, 1);
  CHECK(ident.values == f);
  CHECK(ident.sites == sites);

  CHECK_THROWS(block_average(sites, f, 1, 0));
}

TEST_CASE("block_average: constants, mass preservation, contraction") {
  auto lat = discretize(ContinuumDomain::unit_box(2), 0.05);
  std::vector<double> c(lat.size(), 2.5);
  auto avg = block_average(lat.sites(), c, 2, 3);
  double mass_in = 0, mass_out = 0;
  for (double v : c) mass_in += v;
  for (double v : avg.values) mass_out += v;
  CHECK(mass_out == doctest::Approx(mass_in));

  // Full interior blocks keep the constant exactly.
  std::vector<std::vector<int>> grid;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) grid.push_back({x, y});
  std::vector<double> g(grid.size(), 1.25);
  auto gavg = block_average(grid, g, 2, 3);
  for (double v : gavg.values) CHECK(v == doctest::Approx(1.25));

  Rng rng(99);
  std::vector<double> f(lat.size());
  for (auto& v : f) v = rng.standard_normal();
  for (int L : {1, 2, 5}) {
    auto fl = block_average(lat.sites(), f, 2, L);
    for (double p : {1.0, 2.0, 3.0, std::numeric_limits<double>::infinity()})
      CHECK(scaled_norm(fl.values, 0.05, 2, p) <=
            scaled_norm(f, 0.05, 2, p) * (1 + 1e-12));
  }
}

TEST_CASE("sample_profile") {
  auto lat = discretize(ContinuumDomain::unit_box(1), 0.1);
  auto zero = sample_profile(constant_profile(0.0), lat);
  for (double v : zero) CHECK(v == 0.0);
  auto c = sample_profile(constant_profile(3.25), lat);
  for (double v : c) CHECK(v == 3.25);

  auto linear = sample_profile([](std::span<const double> y) { return y[0]; }, lat);
  for (int i = 0; i < 7; ++i) CHECK(linear[i] == doctest::Approx(0.2 + 0.1 * i));
}

TEST_CASE("path factory and contiguity") {
  auto lat = LatticeDomain::path(5, 0.5);
  CHECK(lat.size() == 5);
  CHECK(lat.is_contiguous_path());
  CHECK(lat.site(0) == std::vector<int>{1});
  CHECK(lat.site(4) == std::vector<int>{5});

  LatticeDomain gap(0.5, 1, {{1}, {3}});
  CHECK_FALSE(gap.is_contiguous_path());
}
