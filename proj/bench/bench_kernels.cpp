// Serial reference loops against the OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "monoid/config.hpp"
#include "monoid/gradcheck.hpp"
#include "monoid/parallel.hpp"

using namespace monoid;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel x" + std::to_string(max_threads()));
}

std::vector<double> random_field(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(static_cast<std::size_t>(n));
  for (double& x : f) x = u(rng);
  return f;
}

void BM_ObjectiveAndGradient(benchmark::State& state) {
  const RunConfig cfg;
  const Dataset data = generate_dataset(cfg.fh, cfg.model.forcing, cfg.time_grid());
  const auto w = init_weights(cfg.architecture, 0, 0.5);
  for (auto _ : state) {
    auto og = objective_and_gradient(w, data, cfg.model, cfg.activation, cfg.train.objective,
                                     AdjointMode::discrete, {}, mode(state));
    benchmark::DoNotOptimize(og.gradient);
  }
  label(state);
}

void BM_GenerateDataset(benchmark::State& state) {
  const RunConfig cfg;
  for (auto _ : state) {
    auto data = generate_dataset(cfg.fh, cfg.model.forcing, cfg.time_grid(), {}, mode(state));
    benchmark::DoNotOptimize(data.entries);
  }
  label(state);
}

void BM_GradientCheck(benchmark::State& state) {
  const RunConfig cfg;
  const Dataset data = generate_dataset(cfg.fh, cfg.model.forcing, TimeGrid(10.0, 200));
  const auto w = init_weights(NetworkArchitecture::uniform(4, 2), 0, 0.5);
  for (auto _ : state) {
    auto r = gradient_check(w, data, cfg.model, cfg.activation, cfg.train.objective, 1e-5, 1e-5,
                            AdjointMode::discrete, {}, mode(state));
    benchmark::DoNotOptimize(r.worst);
  }
  label(state);
}

void BM_Laplacian(benchmark::State& state) {
  const auto grid = SpaceGrid::square(static_cast<int>(state.range(1)), 0.01);
  const auto u = random_field(grid.size(), 1);
  std::vector<double> out(u.size());
  for (auto _ : state) {
    apply_laplacian(grid, u, out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * grid.size());
  label(state);
}

void BM_ReactionTerms(benchmark::State& state) {
  PdeModelConfig cfg;
  cfg.grid = SpaceGrid::square(static_cast<int>(state.range(1)), 0.01);
  const auto w = init_weights(NetworkArchitecture::uniform(7, 2), 0, 0.5);
  const auto act = ActivationSpec::smoothed_relu(2.0);
  const auto v = random_field(cfg.grid.size(), 2);
  const auto ww = random_field(cfg.grid.size(), 3);
  std::vector<double> rv(v.size());
  std::vector<double> rw(v.size());
  std::vector<Mat2> blocks;
  for (auto _ : state) {
    reaction_terms(w, act, cfg, v, ww, rv, rw, &blocks, mode(state));
    benchmark::DoNotOptimize(blocks.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.grid.size());
  label(state);
}

void BM_SimulatePde(benchmark::State& state) {
  PdeModelConfig cfg;
  cfg.grid = SpaceGrid::square(64, 1.0 / 63.0);
  const auto w = init_weights(NetworkArchitecture::uniform(7, 2), 0, 0.5);
  const auto act = ActivationSpec::smoothed_relu(2.0);
  const auto v0 = random_field(cfg.grid.size(), 4);
  const std::vector<double> w0(v0.size(), 0.0);
  for (auto _ : state) {
    auto out = simulate_pde(w, act, cfg, v0, w0, TimeGrid(0.5, 10), {}, mode(state));
    benchmark::DoNotOptimize(out.v_fields);
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_ObjectiveAndGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateDataset)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientCheck)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Laplacian)->ArgsProduct({{0, 1}, {128, 512}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ReactionTerms)->ArgsProduct({{0, 1}, {128, 512}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SimulatePde)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
