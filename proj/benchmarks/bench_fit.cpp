#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "skp/linalg.hpp"
#include "skp/localized.hpp"
#include "skp/obsmodel.hpp"
#include "skp/predictor.hpp"
#include "skp_cli/cli.hpp"

namespace {

using namespace skp;

// Observation density matches the 1330-point desk-scale set: about 9.5 points per unit area.
ObservationSet synthetic(std::size_t m) {
  const double side = std::sqrt(static_cast<double>(m) / 9.5);
  return cli::synthesize(m, {{0.0, side}, {0.0, side}}, 1);
}

const CorrelationModel kModel(BaseKind::gauss2, 0.5, 1.0);

void BM_Assemble(benchmark::State& state) {
  const auto obs = synthetic(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(obs, kModel, 1.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Assemble)->RangeMultiplier(4)->Range(256, 16384)->Complexity()->Unit(benchmark::kMillisecond);

void BM_SparseCholesky(benchmark::State& state) {
  const auto sigma = assemble(synthetic(state.range(0)), kModel, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(SparseCholesky(sigma));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SparseCholesky)->RangeMultiplier(4)->Range(256, 16384)->Complexity()->Unit(benchmark::kMillisecond);

void BM_ApproximateInverse(benchmark::State& state) {
  const auto obs = synthetic(state.range(0));
  const auto sigma = assemble(obs, kModel, 1.0);
  const auto anchors = obs.anchors();
  const double delta = static_cast<double>(state.range(1)) * *kModel.taper_range();
  for (auto _ : state) benchmark::DoNotOptimize(approximate_inverse(sigma, anchors, delta));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApproximateInverse)
    ->ArgsProduct({{256, 1024, 4096}, {1, 2}})
    ->Unit(benchmark::kMillisecond);

void BM_ApproximateInverseWorkers(benchmark::State& state) {
  const auto obs = synthetic(1330);
  const auto sigma = assemble(obs, kModel, 1.0);
  const auto anchors = obs.anchors();
  for (auto _ : state) {
    benchmark::DoNotOptimize(approximate_inverse(sigma, anchors, 2.0, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_ApproximateInverseWorkers)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_GlobalFit(benchmark::State& state) {
  const auto obs = synthetic(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(KernelPredictor::fit(obs, kModel, 1000.0, 2.0e4));
}
BENCHMARK(BM_GlobalFit)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

void BM_LocalizedFit(benchmark::State& state) {
  const auto obs = synthetic(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(LocalizedFit::fit(obs, kModel, 2));
}
BENCHMARK(BM_LocalizedFit)->Arg(1330)->Unit(benchmark::kMillisecond);

// Per-query cost of prediction and variance on the fitted 1330-point set.
void BM_GlobalPredictVariance(benchmark::State& state) {
  const auto obs = synthetic(1330);
  const auto p = KernelPredictor::fit(obs, kModel, 1000.0, 2.0e4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 11.8);
  for (auto _ : state) {
    const Coord x{u(rng), u(rng), 0.0};
    benchmark::DoNotOptimize(p.predict(x));
    benchmark::DoNotOptimize(p.predict_variance(x));
  }
}
BENCHMARK(BM_GlobalPredictVariance);

void BM_LocalizedPredictVariance(benchmark::State& state) {
  const auto f = LocalizedFit::fit(synthetic(1330), kModel, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 11.8);
  for (auto _ : state) {
    const Coord x{u(rng), u(rng), 0.0};
    benchmark::DoNotOptimize(f.predict(x));
    benchmark::DoNotOptimize(f.variance(x));
  }
}
BENCHMARK(BM_LocalizedPredictVariance);

}  // namespace

BENCHMARK_MAIN();
