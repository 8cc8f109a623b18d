#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "olpi/errors.hpp"

namespace olpi {

// Deterministic finite-horizon control problem. States and controls are
// opaque to the engine: the problem supplies dynamics, stage/terminal costs,
// control-set access, and a byte encoding used for hashing and equality.
//
// Control-set access comes in two capabilities: enumerate_controls for finite
// sets (may be null), and control_feasible (membership) plus optional box
// bounds for Euclidean sets. Every function is expected to be deterministic.
template <class S, class U>
struct ControlProblem {
  int horizon = 0;  // number of stages N

  std::function<S(int k, const S& x, const U& u)> dynamics;
  std::function<double(int k, const S& x, const U& u)> stage_cost;
  std::function<double(const S& x)> terminal_cost;

  std::function<std::vector<U>(int k, const S& x)> enumerate_controls;
  std::function<bool(int k, const S& x, const U& u)> control_feasible;

  // Per-coordinate box bounds for Euclidean control sets; empty otherwise.
  std::vector<double> control_lower;
  std::vector<double> control_upper;

  std::function<std::string(const S& x)> encode_state;
  std::function<std::string(const U& u)> encode_control;

  bool can_enumerate() const { return static_cast<bool>(enumerate_controls); }
};

// A complete trajectory {x_0, u_0, x_1, ..., u_{N-1}, x_N}. States are stored
// explicitly rather than re-derived so feasibility is independently checkable.
template <class S, class U>
struct Trajectory {
  std::vector<S> states;    // x_0 ... x_N
  std::vector<U> controls;  // u_0 ... u_{N-1}

  int horizon() const { return static_cast<int>(controls.size()); }
};

// A policy {mu_0, ..., mu_{N-1}}; each stage map takes a state to a control.
// Feasibility of the returned control is checked at query sites, not here.
template <class S, class U>
struct Policy {
  std::vector<std::function<U(const S&)>> stage_maps;

  int horizon() const { return static_cast<int>(stage_maps.size()); }
};

// Per-stage map from encoded state to cost-to-go value.
struct CostToGoTable {
  std::vector<std::unordered_map<std::string, double>> values;

  explicit CostToGoTable(int horizon = 0) : values(static_cast<std::size_t>(horizon) + 1) {}

  int horizon() const { return static_cast<int>(values.size()) - 1; }

  std::optional<double> find(int stage, const std::string& encoded) const {
    const auto& m = values[static_cast<std::size_t>(stage)];
    auto it = m.find(encoded);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  double at(int stage, const std::string& encoded) const {
    auto v = find(stage, encoded);
    if (!v) throw EnumerationError("cost-to-go table has no entry for the requested state at stage " + std::to_string(stage));
    return *v;
  }
};

enum class ViolationKind { none, dynamics_mismatch, constraint_violation };

struct FeasibilityReport {
  bool clean = true;
  int stage = -1;
  ViolationKind kind = ViolationKind::none;
};

// Queries the policy at (k, x) and verifies the control constraint.
template <class S, class U>
U policy_control(const ControlProblem<S, U>& problem, const Policy<S, U>& policy, int k, const S& x) {
  U u = policy.stage_maps[static_cast<std::size_t>(k)](x);
  if (!problem.control_feasible(k, x, u)) {
    throw InfeasibleControlError("policy control violates U_k at stage " + std::to_string(k));
  }
  return u;
}

// Simulates the policy from x0 and returns the resulting feasible trajectory.
template <class S, class U>
Trajectory<S, U> rollout_policy(const ControlProblem<S, U>& problem, const Policy<S, U>& policy, const S& x0) {
  if (policy.horizon() != problem.horizon) {
    throw ShapeError("policy stage count does not match the problem horizon");
  }
  Trajectory<S, U> traj;
  traj.states.reserve(static_cast<std::size_t>(problem.horizon) + 1);
  traj.controls.reserve(static_cast<std::size_t>(problem.horizon));
  S x = x0;
  traj.states.push_back(x);
  for (int k = 0; k < problem.horizon; ++k) {
    U u = policy_control(problem, policy, k, x);
    x = problem.dynamics(k, x, u);
    traj.controls.push_back(std::move(u));
    traj.states.push_back(x);
  }
  return traj;
}

// Reports the first violated stage, or clean. Distinguishes a dynamics
// mismatch (stored x_{k+1} differs from f_k(x_k,u_k)) from a constraint
// violation (u_k outside U_k(x_k)).
template <class S, class U>
FeasibilityReport is_feasible(const ControlProblem<S, U>& problem, const Trajectory<S, U>& traj) {
  if (traj.horizon() != problem.horizon ||
      traj.states.size() != static_cast<std::size_t>(problem.horizon) + 1) {
    throw ShapeError("trajectory shape does not match the problem horizon");
  }
  for (int k = 0; k < problem.horizon; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (!problem.control_feasible(k, traj.states[ks], traj.controls[ks])) {
      return FeasibilityReport{false, k, ViolationKind::constraint_violation};
    }
    const S next = problem.dynamics(k, traj.states[ks], traj.controls[ks]);
    if (problem.encode_state(next) != problem.encode_state(traj.states[ks + 1])) {
      return FeasibilityReport{false, k, ViolationKind::dynamics_mismatch};
    }
  }
  return FeasibilityReport{};
}

// Total cost g_N(x_N) + sum_k g_k(x_k, u_k) of a feasible trajectory.
// Stage costs accumulate in forward order and the terminal cost is added
// last; every cost path in the library uses this same order.
template <class S, class U>
double trajectory_cost(const ControlProblem<S, U>& problem, const Trajectory<S, U>& traj) {
  const FeasibilityReport rep = is_feasible(problem, traj);
  if (!rep.clean) {
    throw FeasibilityError("trajectory infeasible at stage " + std::to_string(rep.stage));
  }
  double total = 0.0;
  for (int k = 0; k < problem.horizon; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    total += problem.stage_cost(k, traj.states[ks], traj.controls[ks]);
  }
  total += problem.terminal_cost(traj.states.back());
  return total;
}

// J_{k,pi}(x): simulates the policy from (x, k) to the horizon and returns the
// accumulated cost. At k == N this is the terminal cost.
template <class S, class U>
double policy_cost_to_go(const ControlProblem<S, U>& problem, const Policy<S, U>& policy, const S& x, int k) {
  if (k < 0 || k > problem.horizon) {
    throw ShapeError("stage index out of range");
  }
  double total = 0.0;
  S cur = x;
  for (int i = k; i < problem.horizon; ++i) {
    const U u = policy_control(problem, policy, i, cur);
    total += problem.stage_cost(i, cur, u);
    cur = problem.dynamics(i, cur, u);
  }
  total += problem.terminal_cost(cur);
  return total;
}

// Memoized cost-to-go evaluation for a fixed policy, keyed by (stage, encoded
// state). Values are backfilled from the tail so the stored numbers satisfy
// J_k = g_k + J_{k+1} exactly as doubles. A simulation that hits an infeasible
// policy control yields +infinity for every state along its path; callers use
// this to discard candidates whose continuation the policy cannot supply.
template <class S, class U>
class CostToGoCache {
 public:
  explicit CostToGoCache(int horizon) : values_(static_cast<std::size_t>(horizon) + 1) {}

  double evaluate(const ControlProblem<S, U>& problem, const Policy<S, U>& policy, const S& x, int k) {
    const int N = problem.horizon;
    std::vector<std::pair<std::string, double>> frames;  // (encoded state, stage cost)
    double tail = 0.0;
    S cur = x;
    int j = k;
    for (;; ++j) {
      std::string enc = problem.encode_state(cur);
      if (auto it = values_[static_cast<std::size_t>(j)].find(enc); it != values_[static_cast<std::size_t>(j)].end()) {
        tail = it->second;
        break;
      }
      if (j == N) {
        tail = problem.terminal_cost(cur);
        values_[static_cast<std::size_t>(j)].emplace(std::move(enc), tail);
        break;
      }
      U u = policy.stage_maps[static_cast<std::size_t>(j)](cur);
      if (!problem.control_feasible(j, cur, u)) {
        tail = std::numeric_limits<double>::infinity();
        values_[static_cast<std::size_t>(j)].emplace(std::move(enc), tail);
        break;
      }
      frames.emplace_back(std::move(enc), problem.stage_cost(j, cur, u));
      cur = problem.dynamics(j, cur, u);
    }
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
      --j;
      tail = it->second + tail;
      values_[static_cast<std::size_t>(j)].emplace(std::move(it->first), tail);
    }
    return tail;
  }

 private:
  std::vector<std::unordered_map<std::string, double>> values_;
};

// Concatenated byte encoding of a whole trajectory; used for exact equality.
template <class S, class U>
std::string encode_trajectory(const ControlProblem<S, U>& problem, const Trajectory<S, U>& traj) {
  std::string out;
  for (const S& x : traj.states) out += problem.encode_state(x);
  for (const U& u : traj.controls) out += problem.encode_control(u);
  return out;
}

}  // namespace olpi
