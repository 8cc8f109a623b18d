#include <benchmark/benchmark.h>

#include "olpi/mda.hpp"

namespace {

// Per-iteration time of the assignment sweep at the larger experiment sizes;
// informational counterpart of the reported stage timings.
void BM_MdaSweep(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto instance = olpi::MdaInstance::random(N, m, 1);
  olpi::Rng rng(2);
  const auto start = olpi::random_mda_trajectory(instance, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(olpi::mda_improvement_sweep(instance, start));
  }
}

void BM_MdaFullRun(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto instance = olpi::MdaInstance::random(N, m, 1);
  for (auto _ : state) {
    olpi::Rng rng(3);
    const auto start = olpi::random_mda_trajectory(instance, rng);
    benchmark::DoNotOptimize(olpi::run_mda_online_pi(instance, start, 30));
  }
}

}  // namespace

BENCHMARK(BM_MdaSweep)->Args({8, 3})->Args({10, 4})->Args({12, 6});
BENCHMARK(BM_MdaFullRun)->Args({8, 3})->Args({12, 6});
