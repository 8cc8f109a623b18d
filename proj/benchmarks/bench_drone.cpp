#include <benchmark/benchmark.h>

#include "olpi/drone.hpp"
#include "olpi/experiment.hpp"
#include "olpi/online_pi.hpp"

namespace {

// Per-stage cost of one coordinate-wise minimization against the base policy;
// this is the quantity the per-stage timing columns report.
void BM_MultiagentStage(benchmark::State& state) {
  const auto scenario =
      olpi::build_scenario(olpi::find_config_file("scenarios/drone_multi_" + std::to_string(state.range(0)) + ".json"));
  const auto problem = olpi::make_drone_problem(scenario);
  const auto policy = olpi::heuristic_base_policy(scenario);
  const auto x0 = scenario.initial_state();
  const auto incumbent = policy.stage_maps[0](x0);
  olpi::Rng rng(1);
  for (auto _ : state) {
    olpi::CostToGoCache<olpi::DroneState, olpi::DroneControl> cache(problem.horizon);
    auto ctg = std::function<double(const olpi::DroneState&)>(
        [&](const olpi::DroneState& y) { return cache.evaluate(problem, policy, y, 1); });
    benchmark::DoNotOptimize(
        olpi::multiagent_minimize(problem, 0, x0, incumbent, ctg, 1e-9, scenario.multiagent, rng));
  }
}

void BM_StageCost(benchmark::State& state) {
  const auto scenario = olpi::build_scenario(olpi::find_config_file("scenarios/drone_single_3.json"));
  const auto x0 = scenario.initial_state();
  const olpi::DroneControl u(3, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(olpi::drone_stage_cost(scenario, 0, x0, u));
  }
}

}  // namespace

BENCHMARK(BM_MultiagentStage)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StageCost);
