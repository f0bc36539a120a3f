#include <benchmark/benchmark.h>

#include "aflab/constraint.hpp"
#include "aflab/maximal.hpp"
#include "aflab/pipeline.hpp"
#include "aflab/truncation.hpp"

using namespace aflab;

namespace {

void BM_MaximalDirect(benchmark::State& state) {
  const Field u = random_test_field(curl(2), TorusGrid(2, static_cast<int>(state.range(0))), 1, 4);
  for (auto _ : state) benchmark::DoNotOptimize(maximal(u, MaximalMethod::direct));
}
BENCHMARK(BM_MaximalDirect)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_MaximalFft(benchmark::State& state) {
  const Field u = random_test_field(curl(2), TorusGrid(2, static_cast<int>(state.range(0))), 1, 4);
  for (auto _ : state) benchmark::DoNotOptimize(maximal(u, MaximalMethod::fft));
}
BENCHMARK(BM_MaximalFft)->Arg(16)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ProjectKernel(benchmark::State& state) {
  const TorusGrid g(2, static_cast<int>(state.range(0)));
  const KernelProjector proj(curl(2, 2), g);
  Field u(g, 4);
  for (std::size_t i = 0; i < u.values().size(); ++i) u.values()[i] = static_cast<double>(i % 7) - 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(proj.project(u));
}
BENCHMARK(BM_ProjectKernel)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_LipschitzTruncate(benchmark::State& state) {
  const Field u = concentrating_gradient_field(static_cast<int>(state.range(0)), 0.05);
  const MaximalField mu = maximal(u);
  const double lambda = upper_level_grid(mu.values, 10)[4];
  for (auto _ : state)
    benchmark::DoNotOptimize(lipschitz_truncate(u, mu, lambda, PotentialKind::gradient));
}
BENCHMARK(BM_LipschitzTruncate)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
