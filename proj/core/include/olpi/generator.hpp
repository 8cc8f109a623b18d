#pragma once

#include <functional>
#include <string>
#include <vector>

#include "olpi/problem.hpp"
#include "olpi/rng.hpp"

namespace olpi {

// A generator maps a complete feasible trajectory to a policy. Stochastic
// generators draw from the supplied randomness source; deterministic ones
// ignore it. The consistency contract: the generated policy must reproduce
// the trajectory's own controls at the trajectory's own states.
template <class S, class U>
struct Generator {
  bool stochastic = false;
  std::function<Policy<S, U>(const Trajectory<S, U>&, Rng&)> generate;
};

// State-independent replay of the trajectory's controls: mu_k(x) = u_k for
// every x. Consistent by construction. Off the trajectory the replayed
// control may be infeasible when control sets are state-dependent; query
// sites check feasibility.
template <class S, class U>
Policy<S, U> tabular_generator(const Trajectory<S, U>& traj) {
  Policy<S, U> policy;
  policy.stage_maps.reserve(traj.controls.size());
  for (const U& u : traj.controls) {
    policy.stage_maps.push_back([u](const S&) { return u; });
  }
  return policy;
}

template <class S, class U>
Generator<S, U> make_tabular_generator() {
  Generator<S, U> g;
  g.stochastic = false;
  g.generate = [](const Trajectory<S, U>& traj, Rng&) { return tabular_generator(traj); };
  return g;
}

struct ConsistencyReport {
  bool consistent = true;
  std::vector<bool> stage_ok;
  int first_failure = -1;
  std::string expected;  // encoded control from the trajectory
  std::string actual;    // encoded control from the policy
};

// Evaluates mu_k(x_k) against u_k at every trajectory state. "Match" is byte
// equality of the control encodings, i.e. bit-identical reproduction for
// real-vector controls.
template <class S, class U>
ConsistencyReport check_policy_consistency(const ControlProblem<S, U>& problem, const Policy<S, U>& policy,
                                           const Trajectory<S, U>& traj) {
  ConsistencyReport report;
  report.stage_ok.resize(traj.controls.size(), false);
  for (int k = 0; k < traj.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const U u = policy.stage_maps[ks](traj.states[ks]);
    const std::string expected = problem.encode_control(traj.controls[ks]);
    const std::string actual = problem.encode_control(u);
    const bool ok = expected == actual;
    report.stage_ok[ks] = ok;
    if (!ok && report.consistent) {
      report.consistent = false;
      report.first_failure = k;
      report.expected = expected;
      report.actual = actual;
    }
  }
  return report;
}

// Generates a policy (with the given seed for stochastic generators) and
// checks it against the trajectory.
template <class S, class U>
ConsistencyReport check_consistency(const ControlProblem<S, U>& problem, const Generator<S, U>& generator,
                                    const Trajectory<S, U>& traj, std::uint64_t seed) {
  Rng rng(seed);
  const Policy<S, U> policy = generator.generate(traj, rng);
  return check_policy_consistency(problem, policy, traj);
}

}  // namespace olpi
