#include <benchmark/benchmark.h>

#include "olpi/hungarian.hpp"
#include "olpi/rng.hpp"

namespace {

std::vector<std::vector<double>> random_matrix(int n, std::uint64_t seed) {
  olpi::Rng rng(seed);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (auto& row : cost) {
    for (double& v : row) v = rng.next_double();
  }
  return cost;
}

void BM_Hungarian(benchmark::State& state) {
  const auto cost = random_matrix(static_cast<int>(state.range(0)), 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(olpi::hungarian_2d_assignment(cost));
  }
}

}  // namespace

BENCHMARK(BM_Hungarian)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
