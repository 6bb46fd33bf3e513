#include <benchmark/benchmark.h>

#include <optional>
#include <random>
#include <vector>

#include "cfdrift/assign.hpp"
#include "cfdrift/pipeline.hpp"
#include "cfdrift/synth.hpp"
#include "cfdrift/timeclf.hpp"

using namespace cfdrift;

namespace {

Dataset gmm_sample(std::size_t n) {
  synth::GmmSpec spec;
  spec.seed = 1;
  Rng rng(2);
  return synth::make_model(spec).sample(n, rng);
}

void BM_Hungarian(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 2 * rows;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::optional<double>> c(rows * cols);
  for (auto& v : c) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(assign::solve_assignment(rows, cols, c));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(8, 128);

void BM_KnnIdentifiability(benchmark::State& state) {
  const auto data = gmm_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const auto clf = timeclf::fit_knn(data);
    benchmark::DoNotOptimize(timeclf::estimate_identifiability(*clf, data.features()));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnIdentifiability)->RangeMultiplier(2)->Range(500, 4000)->Complexity(benchmark::oNSquared);

void BM_ExplainEvent(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  pipeline::Archive archive{gmm_sample(n), {}};
  for (std::size_t i = 0; i < n; ++i) archive.stream_positions.push_back(i);
  const pipeline::StreamConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::explain_snapshot(archive, cfg, 0, 0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExplainEvent)->RangeMultiplier(2)->Range(500, 4000)->Complexity(benchmark::oNSquared)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
