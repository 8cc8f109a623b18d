#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "olpi/problem.hpp"

namespace olpi {

// A control problem together with per-stage lists of all reachable (or
// otherwise relevant) states. Exact DP and exact PI sweep these lists; the
// lists must be closed under the dynamics for every feasible control.
template <class S, class U>
struct EnumerableProblem {
  ControlProblem<S, U> base;
  std::vector<std::vector<S>> stage_states;  // stage_states[k], k = 0..N
};

// Builds the per-stage reachable state lists by forward closure from x0.
// States are deduplicated by their encoding; the first representative seen is
// kept. Requires the enumerate capability.
template <class S, class U>
EnumerableProblem<S, U> enumerate_reachable(const ControlProblem<S, U>& problem, const S& x0) {
  if (!problem.can_enumerate()) {
    throw EnumerationError("forward closure requires enumerable control sets");
  }
  EnumerableProblem<S, U> ep;
  ep.base = problem;
  ep.stage_states.resize(static_cast<std::size_t>(problem.horizon) + 1);
  ep.stage_states[0].push_back(x0);
  for (int k = 0; k < problem.horizon; ++k) {
    std::unordered_set<std::string> seen;
    auto& next = ep.stage_states[static_cast<std::size_t>(k) + 1];
    for (const S& x : ep.stage_states[static_cast<std::size_t>(k)]) {
      for (const U& u : problem.enumerate_controls(k, x)) {
        S y = problem.dynamics(k, x, u);
        std::string enc = problem.encode_state(y);
        if (seen.insert(std::move(enc)).second) {
          next.push_back(std::move(y));
        }
      }
    }
  }
  return ep;
}

namespace detail {

// Tabular policy backed by per-stage encoded-state -> control maps.
template <class S, class U>
Policy<S, U> make_table_policy(const ControlProblem<S, U>& problem,
                               std::shared_ptr<std::vector<std::unordered_map<std::string, U>>> tables) {
  Policy<S, U> policy;
  const auto encode = problem.encode_state;
  for (int k = 0; k < problem.horizon; ++k) {
    policy.stage_maps.push_back([tables, encode, k](const S& x) -> U {
      const auto& table = (*tables)[static_cast<std::size_t>(k)];
      auto it = table.find(encode(x));
      if (it == table.end()) {
        throw EnumerationError("tabular policy queried at a state outside its enumeration (stage " +
                               std::to_string(k) + ")");
      }
      return it->second;
    });
  }
  return policy;
}

}  // namespace detail

// Exact dynamic programming over the enumerated states. Returns the optimal
// cost-to-go table and a policy attaining the stage-wise minima; ties break to
// the first control in enumeration order.
template <class S, class U>
std::pair<CostToGoTable, Policy<S, U>> solve_dp(const EnumerableProblem<S, U>& ep) {
  const auto& p = ep.base;
  if (!p.can_enumerate()) {
    throw EnumerationError("solve_dp requires enumerable control sets");
  }
  const int N = p.horizon;
  CostToGoTable table(N);
  auto controls = std::make_shared<std::vector<std::unordered_map<std::string, U>>>(static_cast<std::size_t>(N));

  for (const S& x : ep.stage_states[static_cast<std::size_t>(N)]) {
    table.values[static_cast<std::size_t>(N)].emplace(p.encode_state(x), p.terminal_cost(x));
  }
  for (int k = N - 1; k >= 0; --k) {
    for (const S& x : ep.stage_states[static_cast<std::size_t>(k)]) {
      const std::vector<U> cands = p.enumerate_controls(k, x);
      if (cands.empty()) {
        throw EnumerationError("empty control set during DP at stage " + std::to_string(k));
      }
      double best = 0.0;
      const U* best_u = nullptr;
      for (const U& u : cands) {
        const double q = p.stage_cost(k, x, u) + table.at(k + 1, p.encode_state(p.dynamics(k, x, u)));
        if (best_u == nullptr || q < best) {
          best = q;
          best_u = &u;
        }
      }
      table.values[static_cast<std::size_t>(k)].emplace(p.encode_state(x), best);
      (*controls)[static_cast<std::size_t>(k)].emplace(p.encode_state(x), *best_u);
    }
  }
  return {std::move(table), detail::make_table_policy(p, controls)};
}

// Exhaustive enumeration of all feasible control sequences from x0. Returns
// the minimal cost and one minimizing trajectory. Throws CapExceededError once
// more than `cap` complete sequences have been evaluated.
template <class S, class U>
std::pair<double, Trajectory<S, U>> brute_force_optimal(const ControlProblem<S, U>& problem, const S& x0,
                                                        long long cap = 10'000'000) {
  if (!problem.can_enumerate()) {
    throw EnumerationError("brute_force_optimal requires enumerable control sets");
  }
  const int N = problem.horizon;
  long long count = 0;
  double best_cost = 0.0;
  bool have_best = false;
  Trajectory<S, U> best;

  Trajectory<S, U> cur;
  cur.states.push_back(x0);

  auto dfs = [&](auto&& self, int k, double partial) -> void {
    if (k == N) {
      ++count;
      if (count > cap) {
        throw CapExceededError("brute force exceeded the sequence cap of " + std::to_string(cap));
      }
      const double total = partial + problem.terminal_cost(cur.states.back());
      if (!have_best || total < best_cost) {
        have_best = true;
        best_cost = total;
        best = cur;
      }
      return;
    }
    const S x = cur.states.back();  // copied: push_back below may reallocate
    for (const U& u : problem.enumerate_controls(k, x)) {
      cur.controls.push_back(u);
      cur.states.push_back(problem.dynamics(k, x, u));
      self(self, k + 1, partial + problem.stage_cost(k, x, u));
      cur.states.pop_back();
      cur.controls.pop_back();
    }
  };
  dfs(dfs, 0, 0.0);
  if (!have_best) {
    throw EnumerationError("no feasible control sequence from the given initial state");
  }
  return {best_cost, std::move(best)};
}

template <class S, class U>
struct PiIterationRecord {
  Policy<S, U> policy;
  CostToGoTable cost_to_go;
};

// Exact policy iteration: evaluation over all enumerated states, then a full
// improvement sweep. Ties in the improvement step break in favor of the
// incumbent control, then enumeration order. Record 0 holds the initial
// policy; iteration stops early once the policy stops changing.
template <class S, class U>
std::vector<PiIterationRecord<S, U>> exact_policy_iteration(const EnumerableProblem<S, U>& ep,
                                                            const Policy<S, U>& pi0, int max_iters) {
  const auto& p = ep.base;
  if (!p.can_enumerate()) {
    throw EnumerationError("exact_policy_iteration requires enumerable control sets");
  }
  const int N = p.horizon;

  auto evaluate = [&](const Policy<S, U>& pi) -> CostToGoTable {
    CostToGoTable table(N);
    for (const S& x : ep.stage_states[static_cast<std::size_t>(N)]) {
      table.values[static_cast<std::size_t>(N)].emplace(p.encode_state(x), p.terminal_cost(x));
    }
    for (int k = N - 1; k >= 0; --k) {
      for (const S& x : ep.stage_states[static_cast<std::size_t>(k)]) {
        const U u = policy_control(p, pi, k, x);
        const double j = p.stage_cost(k, x, u) + table.at(k + 1, p.encode_state(p.dynamics(k, x, u)));
        table.values[static_cast<std::size_t>(k)].emplace(p.encode_state(x), j);
      }
    }
    return table;
  };

  std::vector<PiIterationRecord<S, U>> records;
  records.push_back({pi0, evaluate(pi0)});

  for (int iter = 1; iter <= max_iters; ++iter) {
    const auto& prev = records.back();
    auto tables = std::make_shared<std::vector<std::unordered_map<std::string, U>>>(static_cast<std::size_t>(N));
    bool changed = false;
    for (int k = 0; k < N; ++k) {
      for (const S& x : ep.stage_states[static_cast<std::size_t>(k)]) {
        const U incumbent = policy_control(p, prev.policy, k, x);
        const std::string inc_enc = p.encode_control(incumbent);
        double best = 0.0;
        const U* best_u = nullptr;
        double q_inc = 0.0;
        bool saw_inc = false;
        const std::vector<U> cands = p.enumerate_controls(k, x);
        for (const U& u : cands) {
          const double q =
              p.stage_cost(k, x, u) + prev.cost_to_go.at(k + 1, p.encode_state(p.dynamics(k, x, u)));
          if (p.encode_control(u) == inc_enc) {
            saw_inc = true;
            q_inc = q;
          }
          if (best_u == nullptr || q < best) {
            best = q;
            best_u = &u;
          }
        }
        const U chosen = (saw_inc && q_inc <= best) ? incumbent : *best_u;
        if (p.encode_control(chosen) != inc_enc) changed = true;
        (*tables)[static_cast<std::size_t>(k)].emplace(p.encode_state(x), chosen);
      }
    }
    Policy<S, U> next = detail::make_table_policy(p, tables);
    records.push_back({next, evaluate(next)});
    if (!changed) break;
  }
  return records;
}

}  // namespace olpi
