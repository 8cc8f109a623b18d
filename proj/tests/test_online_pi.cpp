#include <doctest.h>

#include <cmath>

#include "olpi/encoding.hpp"
#include "olpi/enumerable_instance.hpp"
#include "olpi/exact_dp.hpp"
#include "olpi/graph_problem.hpp"
#include "olpi/online_pi.hpp"

using namespace olpi;

namespace {

using Vec = std::vector<double>;

// Single-stage problem whose next state is the control itself; terminal cost
// is supplied by the test.
ControlProblem<Vec, Vec> box_problem(std::function<double(const Vec&)> terminal, double lo = -10.0,
                                     double hi = 10.0) {
  ControlProblem<Vec, Vec> p;
  p.horizon = 1;
  p.control_lower = {lo, lo};
  p.control_upper = {hi, hi};
  p.dynamics = [](int, const Vec&, const Vec& u) { return u; };
  p.stage_cost = [](int, const Vec&, const Vec&) { return 0.0; };
  p.terminal_cost = std::move(terminal);
  p.control_feasible = [lo, hi](int, const Vec&, const Vec& u) {
    for (double v : u) {
      if (v < lo || v > hi) return false;
    }
    return true;
  };
  p.encode_state = [](const Vec& x) { return encode_doubles(x); };
  p.encode_control = [](const Vec& u) { return encode_doubles(u); };
  return p;
}

}  // namespace

TEST_CASE("five-node example: consistent run gives costs 20, 15, 15 and fixes") {
  const auto p = make_graph_control_problem(five_node_example());
  OnlinePiOptions opt;
  opt.max_iters = 8;
  const auto history = run_online_pi(p, 0, five_node_initial_policy(), make_tabular_generator<int, int>(),
                                     full_enumeration_builder(p), opt);
  CHECK(history.costs() == std::vector<double>{20.0, 15.0, 15.0});
  CHECK(history.halted_fixed_point);
  CHECK_FALSE(history.any_improvement_violation());
  CHECK(history.entries[1].trajectory.controls == std::vector<int>{1, 3});
}

TEST_CASE("five-node example: inconsistent generator breaks monotonicity and is flagged") {
  const auto p = make_graph_control_problem(five_node_example());
  OnlinePiOptions opt;
  opt.max_iters = 4;

  SUBCASE("strict mode aborts") {
    CHECK_THROWS_AS((void)run_online_pi(p, 0, five_node_initial_policy(), five_node_inconsistent_generator(),
                                        full_enumeration_builder(p), opt),
                    ConsistencyError);
  }

  SUBCASE("tolerated mode records the violation") {
    opt.allow_inconsistent = true;
    const auto history = run_online_pi(p, 0, five_node_initial_policy(), five_node_inconsistent_generator(),
                                       full_enumeration_builder(p), opt);
    REQUIRE(history.entries.size() >= 2);
    CHECK(history.entries[1].cost == 30.0);  // worse than the initial 20
    CHECK(history.entries[1].improvement_violation);
    CHECK_FALSE(history.entries[1].consistency_ok);
    CHECK(history.any_improvement_violation());
  }
}

TEST_CASE("singleton restricted builder reproduces the incumbent rollout") {
  EnumerableInstanceSpec spec{4, 5, 3, 2};
  const auto p = make_random_enumerable_problem(spec);
  const auto pi = random_enumerable_policy(spec, 3);
  ControlSetBuilder<int, int> singleton;
  singleton.kind = BuilderKind::restricted;
  singleton.build = [](int, const int&, const int& incumbent, Rng&) { return std::vector<int>{incumbent}; };

  Rng rng(0);
  const auto improved = improve_trajectory(p, pi, 0, singleton, 0.0, rng);
  const auto rolled = rollout_policy(p, pi, 0);
  CHECK(encode_trajectory(p, improved.trajectory) == encode_trajectory(p, rolled));
}

TEST_CASE("builder that drops the incumbent aborts the iteration") {
  EnumerableInstanceSpec spec{3, 4, 3, 4};
  const auto p = make_random_enumerable_problem(spec);
  const auto pi = random_enumerable_policy(spec, 5);
  ControlSetBuilder<int, int> broken;
  broken.kind = BuilderKind::restricted;
  broken.build = [](int, const int&, const int& incumbent, Rng&) {
    return std::vector<int>{(incumbent + 1) % 3};
  };
  Rng rng(0);
  CHECK_THROWS_AS((void)improve_trajectory(p, pi, 0, broken, 0.0, rng), IncumbentExclusionError);
}

TEST_CASE("builder that emits an infeasible candidate is reported") {
  EnumerableInstanceSpec spec{3, 4, 3, 4};
  const auto p = make_random_enumerable_problem(spec);
  const auto pi = random_enumerable_policy(spec, 5);
  ControlSetBuilder<int, int> bad;
  bad.kind = BuilderKind::restricted;
  bad.build = [](int, const int&, const int& incumbent, Rng&) { return std::vector<int>{incumbent, 99}; };
  Rng rng(0);
  CHECK_THROWS_AS((void)improve_trajectory(p, pi, 0, bad, 0.0, rng), InfeasibleCandidateError);
}

TEST_CASE("online PI on random enumerable instances: monotone, bounded by J*") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    EnumerableInstanceSpec spec{5, 5, 3, seed};
    const auto p = make_random_enumerable_problem(spec);
    const auto pi0 = random_enumerable_policy(spec, seed + 30);
    OnlinePiOptions opt;
    opt.max_iters = 15;
    opt.seed = seed;
    const auto history =
        run_online_pi(p, 0, pi0, make_tabular_generator<int, int>(), full_enumeration_builder(p), opt);
    for (std::size_t i = 1; i < history.entries.size(); ++i) {
      CHECK(history.entries[i].cost <= history.entries[i - 1].cost);
    }
    const auto [table, policy] = solve_dp(as_enumerable(p, spec));
    CHECK(history.entries.back().cost >= table.at(0, p.encode_state(0)) - 1e-12);
  }
}

TEST_CASE("improvement from an optimal policy attains J* immediately") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    EnumerableInstanceSpec spec{4, 5, 3, seed + 200};
    const auto p = make_random_enumerable_problem(spec);
    const auto [table, opt_policy] = solve_dp(as_enumerable(p, spec));
    Rng rng(seed);
    const auto improved = improve_trajectory(p, opt_policy, 0, full_enumeration_builder(p), 0.0, rng);
    CHECK(std::abs(trajectory_cost(p, improved.trajectory) - table.at(0, p.encode_state(0))) <= 1e-12);
  }
}

TEST_CASE("fixed point implies stage-by-stage identical trajectories") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    EnumerableInstanceSpec spec{4, 5, 3, seed + 60};
    const auto p = make_random_enumerable_problem(spec);
    const auto pi0 = random_enumerable_policy(spec, seed + 61);
    OnlinePiOptions opt;
    opt.max_iters = 20;
    opt.seed = seed;
    const auto history =
        run_online_pi(p, 0, pi0, make_tabular_generator<int, int>(), full_enumeration_builder(p), opt);
    REQUIRE(history.halted_fixed_point);
    const auto& last = history.entries.back();
    const auto& prev = history.entries[history.entries.size() - 2];
    CHECK(last.cost == prev.cost);
    CHECK(encode_trajectory(p, last.trajectory) == encode_trajectory(p, prev.trajectory));
  }
}

TEST_CASE("multiagent with Z = {0} returns the incumbent unchanged") {
  const auto p = box_problem([](const Vec& u) { return u[0] * u[0] + u[1] * u[1]; });
  MultiagentConfig cfg;
  cfg.resolutions = {0.5, 0.5};
  cfg.offsets = {0};
  Rng rng(0);
  const Vec incumbent{1.25, -2.5};
  const auto ctg = std::function<double(const Vec&)>([&](const Vec& x) { return p.terminal_cost(x); });
  int count = 0;
  const Vec out = multiagent_minimize(p, 0, Vec{0.0, 0.0}, incumbent, ctg, 0.0, cfg, rng, &count);
  CHECK(out == incumbent);
  CHECK(count == 2);  // one zero-offset evaluation per coordinate
}

TEST_CASE("multiagent evaluates m*n candidates, not the product grid") {
  const auto p = box_problem([](const Vec& u) { return (u[0] - 2.0) * (u[0] - 2.0) + (u[1] + 1.0) * (u[1] + 1.0); });
  MultiagentConfig cfg;
  cfg.resolutions = {0.25, 0.25};
  cfg.offsets = {-2, -1, 0, 1, 2};
  Rng rng(0);
  const auto ctg = std::function<double(const Vec&)>([&](const Vec& x) { return p.terminal_cost(x); });
  int count = 0;
  (void)multiagent_minimize(p, 0, Vec{0.0, 0.0}, Vec{0.0, 0.0}, ctg, 0.0, cfg, rng, &count);
  CHECK(count == 10);  // 5 * 2, versus 25 on the product grid
}

TEST_CASE("multiagent coordinate descent matches the product grid on separable costs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng setup(seed);
    const double a = setup.next_double() * 4.0 - 2.0;
    const double b = setup.next_double() * 4.0 - 2.0;
    const double w = 0.5 + setup.next_double();
    const auto p = box_problem([a, b, w](const Vec& u) {
      return (u[0] - a) * (u[0] - a) + w * (u[1] - b) * (u[1] - b);
    });
    MultiagentConfig cfg;
    cfg.resolutions = {0.3, 0.3};
    cfg.offsets = {-3, -2, -1, 0, 1, 2, 3};
    const Vec incumbent{setup.next_double() - 0.5, setup.next_double() - 0.5};
    const auto ctg = std::function<double(const Vec&)>([&](const Vec& x) { return p.terminal_cost(x); });
    Rng rng(seed);
    const Vec chosen = multiagent_minimize(p, 0, Vec{0.0, 0.0}, incumbent, ctg, 0.0, cfg, rng, nullptr);

    double best = std::numeric_limits<double>::infinity();
    for (int i : cfg.offsets) {
      for (int j : cfg.offsets) {
        const Vec u{incumbent[0] + i * 0.3, incumbent[1] + j * 0.3};
        best = std::min(best, p.terminal_cost(u));
      }
    }
    CHECK(std::abs(p.terminal_cost(chosen) - best) <= 1e-12);
  }
}

TEST_CASE("multiagent grids are filtered by the box and keep the incumbent feasible") {
  const auto p = box_problem([](const Vec& u) { return u[0] + u[1]; }, -1.0, 1.0);
  MultiagentConfig cfg;
  cfg.resolutions = {0.8, 0.8};
  cfg.offsets = {-2, -1, 0, 1, 2};
  Rng rng(0);
  const auto ctg = std::function<double(const Vec&)>([&](const Vec& x) { return p.terminal_cost(x); });
  int count = 0;
  const Vec out = multiagent_minimize(p, 0, Vec{0.0, 0.0}, Vec{0.9, 0.9}, ctg, 0.0, cfg, rng, &count);
  // offsets +-2 and +1 leave the box along each coordinate
  CHECK(count == 6);
  CHECK(p.control_feasible(0, Vec{0.0, 0.0}, out));
  CHECK(out[0] == doctest::Approx(-0.7));
  CHECK(out[1] == doctest::Approx(-0.7));
}

TEST_CASE("permuted coordinate order is deterministic per seed and uniform") {
  Rng a(9), b(9);
  CHECK(permuted_coordinate_order(6, a) == permuted_coordinate_order(6, b));
  Rng c(10);
  CHECK(permuted_coordinate_order(1, c) == std::vector<int>{0});
}

TEST_CASE("restricted random subsets keep the run monotone") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    EnumerableInstanceSpec spec{5, 6, 4, seed + 90};
    const auto p = make_random_enumerable_problem(spec);
    const auto pi0 = random_enumerable_policy(spec, seed + 91);
    OnlinePiOptions opt;
    opt.max_iters = 12;
    opt.seed = seed;
    const auto history = run_online_pi(p, 0, pi0, make_tabular_generator<int, int>(),
                                       restricted_subset_builder(p, 2), opt);
    for (std::size_t i = 1; i < history.entries.size(); ++i) {
      CHECK(history.entries[i].cost <= history.entries[i - 1].cost);
    }
  }
}
