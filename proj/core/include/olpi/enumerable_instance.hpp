#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "olpi/encoding.hpp"
#include "olpi/exact_dp.hpp"
#include "olpi/problem.hpp"
#include "olpi/rng.hpp"

namespace olpi {

// Seeded random finite problem used by the oracle and invariant suites:
// `states_per_stage` states per stage (ids 0..S-1), `controls_per_state`
// controls everywhere, random transition tables and uniform [0,1) costs. The
// per-stage state lists are closed under the dynamics by construction.
struct EnumerableInstanceSpec {
  int stages = 4;
  int states_per_stage = 5;
  int controls_per_state = 3;
  std::uint64_t seed = 0;
};

inline ControlProblem<int, int> make_random_enumerable_problem(const EnumerableInstanceSpec& spec) {
  const int N = spec.stages;
  const int S = spec.states_per_stage;
  const int C = spec.controls_per_state;
  Rng root(spec.seed);
  Rng trans_rng = root.stream("transitions");
  Rng cost_rng = root.stream("costs");

  auto transitions = std::make_shared<std::vector<int>>();
  auto costs = std::make_shared<std::vector<double>>();
  transitions->reserve(static_cast<std::size_t>(N) * static_cast<std::size_t>(S) * static_cast<std::size_t>(C));
  costs->reserve(transitions->capacity());
  for (int k = 0; k < N; ++k) {
    for (int x = 0; x < S; ++x) {
      for (int u = 0; u < C; ++u) {
        transitions->push_back(trans_rng.next_int(S));
        costs->push_back(cost_rng.next_double());
      }
    }
  }
  auto terminal = std::make_shared<std::vector<double>>();
  for (int x = 0; x < S; ++x) terminal->push_back(cost_rng.next_double());

  auto index = [S, C](int k, int x, int u) {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(S) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(C) +
           static_cast<std::size_t>(u);
  };

  ControlProblem<int, int> p;
  p.horizon = N;
  p.dynamics = [transitions, index](int k, const int& x, const int& u) { return (*transitions)[index(k, x, u)]; };
  p.stage_cost = [costs, index](int k, const int& x, const int& u) { return (*costs)[index(k, x, u)]; };
  p.terminal_cost = [terminal](const int& x) { return (*terminal)[static_cast<std::size_t>(x)]; };
  p.enumerate_controls = [C](int, const int&) {
    std::vector<int> out(static_cast<std::size_t>(C));
    for (int u = 0; u < C; ++u) out[static_cast<std::size_t>(u)] = u;
    return out;
  };
  p.control_feasible = [C](int, const int&, const int& u) { return u >= 0 && u < C; };
  p.encode_state = [](const int& x) { return encode_int(x); };
  p.encode_control = [](const int& u) { return encode_int(u); };
  return p;
}

inline EnumerableProblem<int, int> as_enumerable(const ControlProblem<int, int>& problem,
                                                 const EnumerableInstanceSpec& spec) {
  EnumerableProblem<int, int> ep;
  ep.base = problem;
  ep.stage_states.resize(static_cast<std::size_t>(spec.stages) + 1);
  for (auto& states : ep.stage_states) {
    for (int x = 0; x < spec.states_per_stage; ++x) states.push_back(x);
  }
  return ep;
}

// Uniformly random tabular policy on the instance.
inline Policy<int, int> random_enumerable_policy(const EnumerableInstanceSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  Policy<int, int> pi;
  for (int k = 0; k < spec.stages; ++k) {
    std::vector<int> row(static_cast<std::size_t>(spec.states_per_stage));
    for (int x = 0; x < spec.states_per_stage; ++x) row[static_cast<std::size_t>(x)] = rng.next_int(spec.controls_per_state);
    pi.stage_maps.push_back([row](const int& x) { return row[static_cast<std::size_t>(x)]; });
  }
  return pi;
}

}  // namespace olpi
