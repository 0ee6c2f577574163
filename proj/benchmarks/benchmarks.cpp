#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kmpath/binning.hpp"
#include "kmpath/fokker_planck.hpp"
#include "kmpath/polynomial.hpp"
#include "kmpath/regression.hpp"
#include "kmpath/rng.hpp"
#include "kmpath/sde_model.hpp"
#include "kmpath/simulate.hpp"
#include "kmpath/transition_path.hpp"

namespace {

using namespace kmpath;

void BM_NormalDraw(benchmark::State& state) {
  std::uint64_t step = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(normal_draw(42, 7, step++));
  }
}
BENCHMARK(BM_NormalDraw);

void BM_SimulateDoubleWell(benchmark::State& state) {
  SdeModel model = make_model({0.0, 4.0, 0.0, -1.0}, {1.0});
  SimulationConfig cfg;
  cfg.dt = 1e-3;
  cfg.n_steps = state.range(0);
  cfg.n_paths = 100;
  cfg.x0.is_uniform = true;
  cfg.x0.lo = -3.0;
  cfg.x0.hi = 3.0;
  cfg.seed = 2;
  cfg.threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_em(model, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_paths * cfg.n_steps);
}
BENCHMARK(BM_SimulateDoubleWell)->Args({10000, 1})->Args({10000, 4});

void BM_BinMoments(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  IncrementPairs pairs;
  pairs.x.resize(n);
  pairs.dx.resize(n);
  pairs.delta_t = 1e-3;
  for (int i = 0; i < n; ++i) {
    pairs.x[i] = -3.0 + 6.0 * uniform_draw(9, 0, static_cast<std::uint64_t>(i));
    pairs.dx[i] = 0.03 * normal_draw(9, 1, static_cast<std::uint64_t>(i));
  }
  BinningConfig cfg;
  cfg.n_bins = 50;
  cfg.min_count = 1;
  cfg.range = {{-3.0, 3.0}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(bin_moments(pairs, cfg));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BinMoments)->Arg(100000)->Arg(1000000);

void BM_SelectModel(benchmark::State& state) {
  Eigen::VectorXd centers(48);
  for (int i = 0; i < 48; ++i) centers[i] = -2.4 + 4.8 * i / 47.0;
  Eigen::MatrixXd X = build_design_matrix(centers, 5);
  Eigen::VectorXd y(48);
  for (int i = 0; i < 48; ++i)
    y[i] = 4.0 * centers[i] - std::pow(centers[i], 3) +
           0.05 * normal_draw(77, 0, static_cast<std::uint64_t>(i));
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_model(X, y, 10, 7));
  }
}
BENCHMARK(BM_SelectModel);

void BM_SolveForward(benchmark::State& state) {
  SdeModel model = make_model({0.0, 4.0, 0.0, -1.0}, {1.0});
  PdeGrid grid;
  grid.n_x = static_cast<int>(state.range(0));
  grid.n_t = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_forward(model, -2.0, grid));
  }
}
BENCHMARK(BM_SolveForward)->Args({401, 34})->Args({801, 80});

void BM_TransitionPath(benchmark::State& state) {
  SdeModel model = make_model({0.0, 4.0, 0.0, -1.0}, {1.0});
  PdeGrid grid;
  PathProblem prob{-2.0, 2.0, 1.0};
  DensityField F = solve_forward(model, prob.x0, grid);
  DensityField B = solve_backward(model, prob.xf, grid);
  for (auto _ : state) {
    ConditionalDensity pa = conditional_density(F, B, prob);
    benchmark::DoNotOptimize(most_probable_path(pa));
  }
}
BENCHMARK(BM_TransitionPath);

}  // namespace

BENCHMARK_MAIN();
