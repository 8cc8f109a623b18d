#include "olpi/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "olpi/enumerable_instance.hpp"
#include "olpi/exact_dp.hpp"
#include "olpi/graph_problem.hpp"
#include "olpi/hungarian.hpp"
#include "olpi/mda.hpp"
#include "olpi/online_pi.hpp"

namespace olpi {

namespace {

struct Harness {
  VerifyReport report;
  double budget = 0.0;
  double used = 0.0;

  void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    VerifyCheck check;
    check.name = name;
    if (used >= budget) {
      check.skipped = true;
      check.detail = "budget exhausted";
      report.checks.push_back(std::move(check));
      return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto [passed, detail] = fn();
      check.passed = passed;
      check.detail = std::move(detail);
    } catch (const std::exception& e) {
      check.passed = false;
      check.detail = std::string("exception: ") + e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    check.seconds = std::chrono::duration<double>(t1 - t0).count();
    used += check.seconds;
    report.checks.push_back(std::move(check));
  }
};

std::pair<bool, std::string> check_mda_oracles() {
  // solve_dp on the reduction, brute force over assignments, and the
  // PI fixed point must agree (fixed point cost bounded below by J*).
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto instance = MdaInstance::random(3, 3, seed);
    const auto problem = mda_to_control_problem(instance);
    const auto [bf_cost, bf_paths] = brute_force_mda(instance);
    const auto ep = enumerate_reachable(problem, mda_initial_state(3));
    const auto [table, policy] = solve_dp(ep);
    const double dp_cost = table.at(0, problem.encode_state(mda_initial_state(3)));
    if (std::abs(dp_cost - bf_cost) > 1e-12) {
      return {false, "solve_dp disagrees with assignment brute force on seed " + std::to_string(seed)};
    }
    Rng rng(seed + 1000);
    const auto initial = random_mda_trajectory(instance, rng);
    const auto history = run_mda_online_pi(instance, initial, 20);
    if (history.entries.back().cost < bf_cost - 1e-12) {
      return {false, "on-line PI beat the exact optimum on seed " + std::to_string(seed)};
    }
  }
  return {true, "10/10 seeds agree"};
}

std::pair<bool, std::string> check_hungarian_oracle() {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int m = 2 + static_cast<int>(seed % 5);
    Rng rng(seed);
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m)));
    for (auto& row : cost) {
      for (double& v : row) v = rng.next_double();
    }
    const auto solved = hungarian_2d_assignment(cost);
    // exhaustive reference
    std::vector<int> perm(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < m; ++i) total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (std::abs(solved.cost - best) > 1e-12) {
      return {false, "assignment value mismatch on seed " + std::to_string(seed)};
    }
    ++checked;
  }
  return {true, std::to_string(checked) + " matrices match the permutation minimum"};
}

std::pair<bool, std::string> check_dp_vs_brute_force() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EnumerableInstanceSpec spec{4, 5, 3, seed};
    const auto problem = make_random_enumerable_problem(spec);
    const auto ep = as_enumerable(problem, spec);
    const auto [table, policy] = solve_dp(ep);
    const auto [bf_cost, bf_traj] = brute_force_optimal(problem, 0);
    if (std::abs(table.at(0, problem.encode_state(0)) - bf_cost) > 1e-12) {
      return {false, "solve_dp disagrees with brute force on seed " + std::to_string(seed)};
    }
  }
  return {true, "5/5 instances agree"};
}

std::pair<bool, std::string> check_exact_pi() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EnumerableInstanceSpec spec{4, 5, 3, seed};
    const auto problem = make_random_enumerable_problem(spec);
    const auto ep = as_enumerable(problem, spec);
    const auto [opt_table, opt_policy] = solve_dp(ep);
    const auto records = exact_policy_iteration(ep, random_enumerable_policy(spec, seed), spec.stages);
    for (std::size_t r = 1; r < records.size(); ++r) {
      for (int k = 0; k <= spec.stages; ++k) {
        for (const auto& [enc, value] : records[r].cost_to_go.values[static_cast<std::size_t>(k)]) {
          if (value > records[r - 1].cost_to_go.at(k, enc) + 1e-9) {
            return {false, "policy evaluation increased at some state"};
          }
        }
      }
    }
    const auto& last = records.back().cost_to_go;
    for (int k = 0; k <= spec.stages; ++k) {
      for (const auto& [enc, value] : last.values[static_cast<std::size_t>(k)]) {
        if (std::abs(value - opt_table.at(k, enc)) > 1e-9) {
          return {false, "exact PI did not reach the DP table within N iterations"};
        }
      }
    }
  }
  return {true, "monotone and optimal after N iterations on 5/5 instances"};
}

std::pair<bool, std::string> check_online_pi_monotone_mda() {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto instance = MdaInstance::random(4, 3, seed);
    Rng rng(seed);
    const auto initial = random_mda_trajectory(instance, rng);
    const auto history = run_mda_online_pi(instance, initial, 25);
    for (std::size_t i = 1; i < history.entries.size(); ++i) {
      if (history.entries[i].cost > history.entries[i - 1].cost) {
        return {false, "cost increased on seed " + std::to_string(seed)};
      }
    }
    if (!history.halted_fixed_point) {
      return {false, "no fixed point within 25 iterations on seed " + std::to_string(seed)};
    }
  }
  return {true, "nonincreasing costs and fixed points on 10/10 seeds"};
}

std::pair<bool, std::string> check_online_pi_enumerable() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EnumerableInstanceSpec spec{4, 5, 3, seed};
    const auto problem = make_random_enumerable_problem(spec);
    const auto pi0 = random_enumerable_policy(spec, seed + 77);
    OnlinePiOptions opt;
    opt.max_iters = 15;
    opt.seed = seed;
    const auto history = run_online_pi(problem, 0, pi0, make_tabular_generator<int, int>(),
                                       full_enumeration_builder(problem), opt);
    for (std::size_t i = 1; i < history.entries.size(); ++i) {
      if (history.entries[i].cost > history.entries[i - 1].cost) {
        return {false, "cost increased on seed " + std::to_string(seed)};
      }
    }
    const auto ep = as_enumerable(problem, spec);
    const auto [table, policy] = solve_dp(ep);
    if (history.entries.back().cost < table.at(0, problem.encode_state(0)) - 1e-12) {
      return {false, "final cost fell below the optimum on seed " + std::to_string(seed)};
    }
  }
  return {true, "monotone, bounded below by J* on 5/5 seeds"};
}

std::pair<bool, std::string> check_restricted_builder_monotone() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EnumerableInstanceSpec spec{5, 6, 4, seed};
    const auto problem = make_random_enumerable_problem(spec);
    const auto pi0 = random_enumerable_policy(spec, seed + 13);
    OnlinePiOptions opt;
    opt.max_iters = 12;
    opt.seed = seed;
    const auto history = run_online_pi(problem, 0, pi0, make_tabular_generator<int, int>(),
                                       restricted_subset_builder(problem, 2), opt);
    for (std::size_t i = 1; i < history.entries.size(); ++i) {
      if (history.entries[i].cost > history.entries[i - 1].cost) {
        return {false, "restricted run increased cost on seed " + std::to_string(seed)};
      }
    }
  }
  return {true, "randomized incumbent-including subsets stay monotone on 5/5 seeds"};
}

std::pair<bool, std::string> check_consistency_contracts() {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto instance = MdaInstance::random(4, 3, seed);
    const auto problem = mda_to_control_problem(instance);
    Rng rng(seed);
    const auto traj = random_mda_trajectory(instance, rng);
    const auto report = check_consistency(problem, make_tabular_generator<MdaState, MdaControl>(), traj, seed);
    if (!report.consistent) return {false, "tabular generator failed on seed " + std::to_string(seed)};
    // bridge: rollout of the generated policy reproduces the trajectory
    const auto rolled = rollout_policy(problem, tabular_generator(traj), traj.states.front());
    if (encode_trajectory(problem, rolled) != encode_trajectory(problem, traj)) {
      return {false, "replay rollout diverged from its source trajectory"};
    }
  }
  return {true, "20/20 trajectories reproduced exactly"};
}

std::pair<bool, std::string> check_injected_inconsistency() {
  // The deliberately inconsistent generator must be caught at the exact
  // stage, and the tolerated run must record an improvement violation.
  const auto problem = make_graph_control_problem(five_node_example());
  const auto pi0 = five_node_initial_policy();
  const auto builder = full_enumeration_builder(problem);

  OnlinePiOptions strict;
  strict.max_iters = 4;
  bool threw = false;
  try {
    run_online_pi(problem, 0, pi0, five_node_inconsistent_generator(), builder, strict);
  } catch (const ConsistencyError&) {
    threw = true;
  }
  if (!threw) return {false, "strict run did not raise ConsistencyError"};

  OnlinePiOptions tolerant = strict;
  tolerant.allow_inconsistent = true;
  const auto history = run_online_pi(problem, 0, pi0, five_node_inconsistent_generator(), builder, tolerant);
  if (!history.entries[1].improvement_violation) {
    return {false, "tolerated run did not flag the improvement violation"};
  }
  if (history.entries[1].consistency_ok) {
    return {false, "tolerated run did not record the consistency failure"};
  }
  return {true, "violation detected at iteration 1, exactly as injected"};
}

std::pair<bool, std::string> check_multiagent_counts() {
  // Separable two-coordinate problem: coordinate descent must match the full
  // product grid, and candidate counts stay at or below |Z| * n.
  using Vec = std::vector<double>;
  ControlProblem<Vec, Vec> p;
  p.horizon = 1;
  p.control_lower = {-10.0, -10.0};
  p.control_upper = {10.0, 10.0};
  p.dynamics = [](int, const Vec&, const Vec& u) { return u; };
  p.stage_cost = [](int, const Vec&, const Vec& u) {
    return (u[0] - 1.3) * (u[0] - 1.3) + 2.0 * (u[1] + 0.7) * (u[1] + 0.7);
  };
  p.terminal_cost = [](const Vec&) { return 0.0; };
  p.control_feasible = [](int, const Vec&, const Vec& u) {
    return u[0] >= -10.0 && u[0] <= 10.0 && u[1] >= -10.0 && u[1] <= 10.0;
  };
  p.encode_state = [](const Vec& x) { return encode_doubles(x); };
  p.encode_control = [](const Vec& u) { return encode_doubles(u); };

  MultiagentConfig cfg;
  cfg.resolutions = {0.5, 0.5};
  cfg.offsets = {-3, -2, -1, 0, 1, 2, 3};

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Vec x0 = {0.0, 0.0};
    const Vec incumbent = {rng.next_double() * 2.0 - 1.0, rng.next_double() * 2.0 - 1.0};
    auto ctg = std::function<double(const Vec&)>([](const Vec&) { return 0.0; });
    int evaluated = 0;
    Rng ma_rng(seed);
    const Vec chosen = multiagent_minimize(p, 0, x0, incumbent, ctg, 0.0, cfg, ma_rng, &evaluated);
    if (evaluated > static_cast<int>(cfg.offsets.size()) * 2) {
      return {false, "candidate count exceeded |Z| * n"};
    }
    // full product grid
    double best = std::numeric_limits<double>::infinity();
    Vec best_u = incumbent;
    for (int a : cfg.offsets) {
      for (int b : cfg.offsets) {
        const Vec u = {incumbent[0] + a * 0.5, incumbent[1] + b * 0.5};
        const double q = p.stage_cost(0, x0, u);
        if (q < best) {
          best = q;
          best_u = u;
        }
      }
    }
    const double got = p.stage_cost(0, x0, chosen);
    if (std::abs(got - best) > 1e-12) {
      return {false, "coordinate descent missed the product-grid minimum on a separable cost"};
    }
  }
  return {true, "m*n counting holds and separable minimization matches the product grid"};
}

}  // namespace

VerifyReport run_verify(VerifySuite suite, double budget_seconds) {
  Harness h;
  h.budget = budget_seconds;
  if (suite == VerifySuite::oracle || suite == VerifySuite::all) {
    h.run("oracle/mda-dp-bruteforce-pi", check_mda_oracles);
    h.run("oracle/hungarian-vs-permutations", check_hungarian_oracle);
    h.run("oracle/dp-vs-bruteforce", check_dp_vs_brute_force);
  }
  if (suite == VerifySuite::invariants || suite == VerifySuite::all) {
    h.run("invariants/exact-pi-monotone-optimal", check_exact_pi);
    h.run("invariants/online-pi-mda-monotone-fixedpoint", check_online_pi_monotone_mda);
    h.run("invariants/online-pi-enumerable-monotone", check_online_pi_enumerable);
    h.run("invariants/restricted-builder-monotone", check_restricted_builder_monotone);
    h.run("invariants/generator-consistency", check_consistency_contracts);
    h.run("invariants/injected-inconsistency-detected", check_injected_inconsistency);
    h.run("invariants/multiagent-counts-and-separable", check_multiagent_counts);
  }
  return h.report;
}

std::string verify_table(const VerifyReport& report) {
  std::string out;
  for (const auto& c : report.checks) {
    char line[256];
    if (c.skipped) {
      std::snprintf(line, sizeof(line), "[skip] %-45s %s\n", c.name.c_str(), c.detail.c_str());
    } else {
      std::snprintf(line, sizeof(line), "[%s] %-45s %6.2fs  %s\n", c.passed ? "pass" : "FAIL", c.name.c_str(),
                    c.seconds, c.detail.c_str());
    }
    out += line;
  }
  return out;
}

}  // namespace olpi
