#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "olpi/exact_dp.hpp"
#include "olpi/mda.hpp"
#include "olpi/online_pi.hpp"

using namespace olpi;

TEST_CASE("m = 1 instance has a single trajectory with the table cost") {
  // one grouping: tuple (0,0,0)
  const auto instance = MdaInstance::from_table(2, 1, {0.75});
  const auto problem = mda_to_control_problem(instance);
  Rng rng(0);
  const auto traj = random_mda_trajectory(instance, rng);
  CHECK(trajectory_cost(problem, traj) == 0.75);
  const auto [cost, paths] = brute_force_mda(instance);
  CHECK(cost == 0.75);
}

TEST_CASE("N = 2, m = 2 table instance: trajectory cost reads straight from the table") {
  // tuple index = t0 + 2 t1 + 4 t2
  std::vector<double> table(8, 0.0);
  table[0] = 0.10;  // (0,0,0)
  table[7] = 0.20;  // (1,1,1)
  table[6] = 0.30;  // (0,1,1)
  table[1] = 0.40;  // (1,0,0)
  table[2] = 0.55;  // (0,1,0)
  table[5] = 0.65;  // (1,0,1)
  table[4] = 0.05;  // (0,0,1)
  table[3] = 0.95;  // (1,1,0)
  const auto instance = MdaInstance::from_table(2, 2, table);
  const auto problem = mda_to_control_problem(instance);

  Trajectory<MdaState, MdaControl> traj;
  traj.states.push_back(mda_initial_state(2));
  MdaControl identity{{0, 1}};
  traj.states.push_back(problem.dynamics(0, traj.states[0], identity));
  traj.controls.push_back(identity);
  traj.states.push_back(problem.dynamics(1, traj.states[1], identity));
  traj.controls.push_back(identity);
  // groupings (0,0,0) and (1,1,1)
  CHECK(trajectory_cost(problem, traj) == 0.10 + 0.20);

  // cross-check the four-assignment minimum against DP on the reduction
  const auto [opt, paths] = brute_force_mda(instance);
  const auto ep = enumerate_reachable(problem, mda_initial_state(2));
  const auto [table2, policy] = solve_dp(ep);
  CHECK(std::abs(opt - table2.at(0, problem.encode_state(mda_initial_state(2)))) <= 1e-12);
}

TEST_CASE("PRF instances are deterministic and collision-free in practice") {
  const auto a = MdaInstance::random(3, 3, 99);
  const auto b = MdaInstance::random(3, 3, 99);
  const std::vector<int> tuple{0, 1, 2, 1};
  CHECK(a.grouping_cost(tuple) == b.grouping_cost(tuple));

  // distinct tuples essentially never collide
  const auto big = MdaInstance::random(4, 10, 7);
  std::set<double> seen;
  std::vector<int> t(5);
  int draws = 0;
  for (int i = 0; i < 100000 && draws < 100000; ++i) {
    for (int j = 0; j < 5; ++j) t[static_cast<std::size_t>(j)] = (i * (j + 13) + j * j) % 10;
    seen.insert(big.grouping_cost(t));
    ++draws;
  }
  // tuples above repeat; require only that repeated tuples map to repeated
  // values (set size equals the number of distinct tuples)
  std::set<std::vector<int>> tuples;
  for (int i = 0; i < 100000; ++i) {
    for (int j = 0; j < 5; ++j) t[static_cast<std::size_t>(j)] = (i * (j + 13) + j * j) % 10;
    tuples.insert(t);
  }
  CHECK(seen.size() == tuples.size());
}

TEST_CASE("large instances are constructible and queryable in O(1) memory") {
  const auto instance = MdaInstance::random(12, 6, 1);
  std::vector<int> tuple(13, 5);
  const double c = instance.grouping_cost(tuple);
  CHECK(c >= 0.0);
  CHECK(c < 1.0);
  CHECK_FALSE(instance.has_table());
}

TEST_CASE("solve_dp on the reduction equals brute_force_mda on seeded instances") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto instance = MdaInstance::random(3, 3, seed);
    const auto problem = mda_to_control_problem(instance);
    const auto ep = enumerate_reachable(problem, mda_initial_state(3));
    const auto [table, policy] = solve_dp(ep);
    const auto [bf, paths] = brute_force_mda(instance);
    CHECK(std::abs(table.at(0, problem.encode_state(mda_initial_state(3))) - bf) <= 1e-12);
  }
  // N = 4 as well, still desk-scale
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto instance = MdaInstance::random(4, 3, seed + 10);
    const auto problem = mda_to_control_problem(instance);
    const auto [bf, paths] = brute_force_mda(instance);
    const auto [dp_cost, dp_traj] = brute_force_optimal(problem, mda_initial_state(3));
    CHECK(std::abs(dp_cost - bf) <= 1e-12);
  }
}

TEST_CASE("sweep from an optimal trajectory keeps its cost") {
  const auto instance = MdaInstance::random(3, 3, 17);
  const auto problem = mda_to_control_problem(instance);
  const auto [opt_cost, opt_traj] = brute_force_optimal(problem, mda_initial_state(3));
  const auto swept = mda_improvement_sweep(instance, opt_traj);
  CHECK(trajectory_cost(problem, swept) == opt_cost);
}

TEST_CASE("sweep strictly improves suboptimal random starts (sampled)") {
  int improved = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto instance = MdaInstance::random(4, 3, seed + 40);
    const auto problem = mda_to_control_problem(instance);
    Rng rng(seed);
    const auto start = random_mda_trajectory(instance, rng);
    const double c0 = trajectory_cost(problem, start);
    const auto [opt, paths] = brute_force_mda(instance);
    const auto swept = mda_improvement_sweep(instance, start);
    const double c1 = trajectory_cost(problem, swept);
    CHECK(c1 <= c0);
    CHECK(c1 >= opt - 1e-12);
    if (c0 > opt + 1e-9) {
      ++total;
      if (c1 < c0) ++improved;
    }
  }
  CHECK(improved == total);  // iteration 1 strictly improves every suboptimal start here
}

TEST_CASE("one sweep equals the generic engine's improvement step") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto instance = MdaInstance::random(3, 3, seed + 70);
    const auto problem = mda_to_control_problem(instance);
    Rng rng(seed);
    const auto start = random_mda_trajectory(instance, rng);

    const auto swept = mda_improvement_sweep(instance, start);

    Rng improve_rng(0);
    const auto generic = improve_trajectory(problem, tabular_generator(start), mda_initial_state(3),
                                            full_enumeration_builder(problem), 0.0, improve_rng);
    CHECK(trajectory_cost(problem, swept) == trajectory_cost(problem, generic.trajectory));
    CHECK(encode_trajectory(problem, swept) == encode_trajectory(problem, generic.trajectory));
  }
}

TEST_CASE("online PI on MDA is exactly monotone with a verified fixed point") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto instance = MdaInstance::random(5, 4, seed);
    Rng rng(seed);
    const auto start = random_mda_trajectory(instance, rng);
    const auto history = run_mda_online_pi(instance, start, 30);
    for (std::size_t i = 1; i < history.entries.size(); ++i) {
      CHECK(history.entries[i].cost <= history.entries[i - 1].cost);
    }
    REQUIRE(history.halted_fixed_point);
    const auto problem = mda_to_control_problem(instance);
    const auto& last = history.entries.back();
    const auto& prev = history.entries[history.entries.size() - 2];
    CHECK(last.cost == prev.cost);
    CHECK(encode_trajectory(problem, last.trajectory) == encode_trajectory(problem, prev.trajectory));
  }
}

TEST_CASE("gap and ratio metrics behave per the small/large experiment convention") {
  const auto instance = MdaInstance::random(4, 3, 123);
  const auto problem = mda_to_control_problem(instance);
  Rng rng(1);
  const auto start = random_mda_trajectory(instance, rng);
  const auto history = run_mda_online_pi(instance, start, 20);
  const auto [opt, paths] = brute_force_mda(instance);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (const auto& e : history.entries) {
    const double gap = (e.cost - opt) / opt;
    CHECK(gap >= -1e-12);
    CHECK(gap <= prev_gap + 1e-12);
    prev_gap = gap;
    CHECK(e.cost / history.entries.front().cost <= 1.0 + 1e-12);
  }
}

TEST_CASE("instance JSON round-trips in both forms") {
  const auto prf = MdaInstance::random(5, 4, 77);
  const auto prf_back = MdaInstance::from_json(prf.to_json());
  std::vector<int> tuple{0, 1, 2, 3, 0, 1};
  CHECK(prf_back.grouping_cost(tuple) == prf.grouping_cost(tuple));

  const auto tab = MdaInstance::from_table(1, 2, {0.1, 0.2, 0.3, 0.4});
  const auto tab_back = MdaInstance::from_json(tab.to_json());
  const std::vector<int> t2{1, 0};
  CHECK(tab_back.grouping_cost(t2) == tab.grouping_cost(t2));
}

TEST_CASE("brute force cap triggers on large instances") {
  const auto instance = MdaInstance::random(8, 5, 3);
  CHECK_THROWS_AS((void)brute_force_mda(instance, 1000), CapExceededError);
}
