#include <benchmark/benchmark.h>

#include <vector>

#include "anderson/eigensolve.hpp"
#include "anderson/hamiltonian.hpp"
#include "anderson/lattice.hpp"
#include "anderson/potential.hpp"

using namespace anderson;

namespace {

SparseHamiltonian make_instance(int d, double eps, std::uint64_t seed) {
  auto lat = discretize(ContinuumDomain::unit_box(d), eps);
  PotentialModel model;
  auto xi = sample_potential(model, lat, seed);
  return assemble(lat, xi);
}

void BM_assemble(benchmark::State& state) {
  auto lat = discretize(ContinuumDomain::unit_box(3), 1.0 / state.range(0));
  PotentialModel model;
  auto xi = sample_potential(model, lat, 1);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(lat, xi));
  state.SetLabel(std::to_string(lat.size()) + " sites");
}
BENCHMARK(BM_assemble)->Arg(8)->Arg(16)->Arg(24);

void BM_matvec(benchmark::State& state) {
  auto H = make_instance(3, 1.0 / state.range(0), 2);
  Eigen::VectorXd v = Eigen::VectorXd::Random(H.dim);
  for (auto _ : state) benchmark::DoNotOptimize(matvec(H, v));
  state.SetLabel(std::to_string(H.dim) + " sites");
}
BENCHMARK(BM_matvec)->Arg(8)->Arg(16)->Arg(32);

void BM_lowest_k_dense(benchmark::State& state) {
  auto H = make_instance(2, 1.0 / state.range(0), 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(lowest_k_values(H, 3, 1e-10, SolveMethod::Dense));
  state.SetLabel(std::to_string(H.dim) + " sites");
}
BENCHMARK(BM_lowest_k_dense)->Arg(16)->Arg(32);

void BM_lowest_k_lanczos(benchmark::State& state) {
  auto H = make_instance(3, 1.0 / state.range(0), 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(lowest_k_values(H, 3, 1e-9, SolveMethod::Lanczos));
  state.SetLabel(std::to_string(H.dim) + " sites");
}
BENCHMARK(BM_lowest_k_lanczos)->Arg(16)->Arg(24);

void BM_tridiagonal_solve(benchmark::State& state) {
  auto lat = LatticeDomain::path(state.range(0), 1.0 / (state.range(0) + 3));
  PotentialModel model;
  auto xi = sample_potential(model, lat, 5);
  auto H = assemble(lat, xi);
  for (auto _ : state) benchmark::DoNotOptimize(lowest_k_values(H, 2, 1e-10));
}
BENCHMARK(BM_tridiagonal_solve)->Arg(255)->Arg(511)->Arg(1023);

}  // namespace

BENCHMARK_MAIN();
