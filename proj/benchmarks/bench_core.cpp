// Microbenchmarks for the hot paths: Hamiltonian bundle evaluation, the
// cyclic tridiagonal kernel, field interpolation, observable evaluation,
// the counter RNG, and one small end-to-end cell solve.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "matherlab/cell_solver.hpp"
#include "matherlab/dictionary.hpp"
#include "matherlab/field.hpp"
#include "matherlab/fokker_planck.hpp"
#include "matherlab/hamiltonian.hpp"
#include "matherlab/numerics.hpp"
#include "matherlab/sde_lab.hpp"

using namespace mather;

static void BM_HamiltonianEval1D(benchmark::State& state) {
  const HamiltonianPtr spec = make_hamiltonian("pendulum");
  double x[1] = {0.37};
  double p[1] = {0.61};
  double t = 0.0;
  for (auto _ : state) {
    t += 1e-6;
    benchmark::DoNotOptimize(spec->eval(x, p, t));
  }
}
BENCHMARK(BM_HamiltonianEval1D);

static void BM_HamiltonianEval2D(benchmark::State& state) {
  const HamiltonianPtr spec = make_hamiltonian("smoothed2d", {{"delta", 0.1}});
  double x[2] = {0.37, 0.82};
  double p[2] = {0.61, -0.4};
  double t = 0.0;
  for (auto _ : state) {
    t += 1e-6;
    benchmark::DoNotOptimize(spec->eval(x, p, t));
  }
}
BENCHMARK(BM_HamiltonianEval2D);

static void BM_CyclicTridiagonal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CyclicTridiagonal solver(n, 1.0 + 4.0, -2.0);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(kTwoPi * i / n);
  for (auto _ : state) {
    solver.solve(x.data());
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CyclicTridiagonal)->Arg(128)->Arg(1024);

static void BM_Interpolate(benchmark::State& state) {
  const PeriodicGrid grid(1, 128, 128);
  ScalarField f(grid);
  double xx[2];
  double tt;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    grid.node_coords(i, xx, tt);
    f.values[i] = std::sin(kTwoPi * xx[0]) * std::cos(kTwoPi * tt);
  }
  double x[1] = {0.123456};
  double t = 0.77;
  for (auto _ : state) {
    x[0] += 1e-7;
    benchmark::DoNotOptimize(interpolate(f, x, t));
  }
}
BENCHMARK(BM_Interpolate);

static void BM_MuObservableEval(benchmark::State& state) {
  const auto dict = mu_observable_dictionary(1, 2.0);
  const MuObservable& obs = dict.back();
  double x[1] = {0.3};
  double p[1] = {0.8};
  double t = 0.1;
  for (auto _ : state) {
    p[0] = 0.8 + 1e-9 * static_cast<double>(state.iterations());
    benchmark::DoNotOptimize(obs.eval(x, t, p));
  }
}
BENCHMARK(BM_MuObservableEval);

static void BM_CounterRng(benchmark::State& state) {
  double g0, g1;
  std::uint64_t step = 0;
  for (auto _ : state) {
    CounterRng::gauss_pair(1, 7, ++step, g0, g1);
    benchmark::DoNotOptimize(g0);
  }
}
BENCHMARK(BM_CounterRng);

static void BM_SolveCellSmall(benchmark::State& state) {
  const HamiltonianPtr spec = make_hamiltonian("pendulum");
  const PeriodicGrid grid(1, 32, 32);
  const double P[1] = {0.5};
  SolverConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_cell(spec, P, 0.2, grid, cfg));
}
BENCHMARK(BM_SolveCellSmall)->Unit(benchmark::kMillisecond);

static void BM_ThetaSmall(benchmark::State& state) {
  const HamiltonianPtr spec = make_hamiltonian("pendulum");
  const PeriodicGrid grid(1, 32, 32);
  const double P[1] = {0.5};
  SolverConfig cfg;
  const CellSolution sol = solve_cell(spec, P, 0.2, grid, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_theta(sol.drift, sol.eps, 1e-8, 5000));
}
BENCHMARK(BM_ThetaSmall)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
