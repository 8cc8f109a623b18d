#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "olpi/generator.hpp"
#include "olpi/problem.hpp"
#include "olpi/rng.hpp"

namespace olpi {

// Candidate-set construction for the per-stage minimizations. `full` uses the
// problem's enumerate capability; `restricted` uses an arbitrary finite subset
// that must contain the incumbent control; `multiagent` replaces the single
// minimization by coordinate-wise minimizations over discretized grids.
enum class BuilderKind { full, restricted, multiagent };

// Coordinate grids for multiagent minimization: along coordinate i the
// candidates are incumbent_i + m * resolutions[i] for m in offsets. The
// offsets must contain 0 so the incumbent stays in the first coordinate set.
struct MultiagentConfig {
  std::vector<double> resolutions;
  std::vector<int> offsets;
  enum class Order { fixed, permuted } order = Order::fixed;

  void validate() const {
    if (resolutions.empty()) throw ConfigError("multiagent config: resolutions must be nonempty");
    for (double r : resolutions) {
      if (!(r > 0.0)) throw ConfigError("multiagent config: resolutions must be positive");
    }
    bool has_zero = false;
    for (int m : offsets) has_zero = has_zero || m == 0;
    if (!has_zero) throw ConfigError("multiagent config: offsets must contain 0");
  }
};

template <class S, class U>
struct ControlSetBuilder {
  BuilderKind kind = BuilderKind::full;
  // Ordered candidate set containing the incumbent (full/restricted kinds).
  std::function<std::vector<U>(int k, const S& x, const U& incumbent, Rng& rng)> build;
  // Used when kind == multiagent; controls must then be real vectors.
  MultiagentConfig multiagent;
};

// Uniform random permutation of coordinate indices {0, ..., n-1}.
inline std::vector<int> permuted_coordinate_order(int n, Rng& rng) {
  return random_permutation(n, rng);
}

// Coordinate-wise minimization of g_k(x,u) + J(f_k(x,u)) over discretized
// lines through the incumbent, one coordinate at a time. Within each
// coordinate the zero offset (the current point) is preferred under ties, so
// an incumbent that attains the minimum along the sequential path is returned
// unchanged. Evaluates sum_i |U_hat_{k,i}| candidates, never the product grid.
template <class S>
std::vector<double> multiagent_minimize(const ControlProblem<S, std::vector<double>>& problem, int k, const S& x,
                                        const std::vector<double>& incumbent,
                                        const std::function<double(const S&)>& cost_to_go, double tie_tol,
                                        const MultiagentConfig& cfg, Rng& rng,
                                        int* candidates_evaluated = nullptr) {
  cfg.validate();
  const int n = static_cast<int>(incumbent.size());
  if (cfg.resolutions.size() != 1 && static_cast<int>(cfg.resolutions.size()) != n) {
    throw ConfigError("multiagent config: resolutions must have 1 or n entries");
  }
  if (!problem.control_feasible(k, x, incumbent)) {
    throw EmptyCoordinateSetError("incumbent control is infeasible at stage " + std::to_string(k));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  if (cfg.order == MultiagentConfig::Order::permuted) {
    order = permuted_coordinate_order(n, rng);
  } else {
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  }

  auto q_value = [&](const std::vector<double>& u) {
    return problem.stage_cost(k, x, u) + cost_to_go(problem.dynamics(k, x, u));
  };

  int evaluated = 0;
  std::vector<double> current = incumbent;
  std::vector<double> candidate = incumbent;
  for (int idx = 0; idx < n; ++idx) {
    const int i = order[static_cast<std::size_t>(idx)];
    const double rho = cfg.resolutions[cfg.resolutions.size() == 1 ? 0 : static_cast<std::size_t>(i)];
    const double base = incumbent[static_cast<std::size_t>(i)];

    double best = std::numeric_limits<double>::infinity();
    double best_value = 0.0;
    bool have_best = false;
    double zero_value = 0.0;
    bool have_zero = false;

    candidate = current;
    for (int m : cfg.offsets) {
      candidate[static_cast<std::size_t>(i)] = base + static_cast<double>(m) * rho;
      if (!problem.control_feasible(k, x, candidate)) continue;  // grid point outside U_k
      const double q = q_value(candidate);
      ++evaluated;
      if (m == 0) {
        have_zero = true;
        zero_value = q;
      }
      if (!have_best || q < best) {
        best = q;
        best_value = candidate[static_cast<std::size_t>(i)];
        have_best = true;
      }
    }
    if (!have_best) {
      throw EmptyCoordinateSetError("membership filtering removed every candidate at stage " +
                                    std::to_string(k) + ", coordinate " + std::to_string(i));
    }
    const double slack = tie_tol * std::max(1.0, std::abs(best));
    if (have_zero && zero_value <= best + slack) {
      current[static_cast<std::size_t>(i)] = base;  // keep the current point
    } else {
      current[static_cast<std::size_t>(i)] = best_value;
    }
  }
  if (candidates_evaluated != nullptr) *candidates_evaluated = evaluated;
  return current;
}

template <class S, class U>
struct ImproveResult {
  Trajectory<S, U> trajectory;
  std::vector<double> stage_ms;
  std::vector<int> stage_candidates;
};

// One on-line PI improvement pass: for k = 0..N-1 minimizes
// g_k(x_k, u) + J_{k+1,pi}(f_k(x_k, u)) over the built candidate set, with
// ties within tie_tol resolved to the incumbent control mu_k(x_k). Cost-to-go
// values come from forward simulation of the incumbent policy, memoized per
// (stage, state) for the duration of the pass. Candidates whose continuation
// hits an infeasible policy control evaluate to +infinity and are never
// chosen.
template <class S, class U>
ImproveResult<S, U> improve_trajectory(const ControlProblem<S, U>& problem, const Policy<S, U>& policy,
                                       const S& x0, const ControlSetBuilder<S, U>& builder, double tie_tol,
                                       Rng& rng) {
  if (policy.horizon() != problem.horizon) {
    throw ShapeError("policy stage count does not match the problem horizon");
  }
  const int N = problem.horizon;
  ImproveResult<S, U> result;
  result.trajectory.states.reserve(static_cast<std::size_t>(N) + 1);
  result.trajectory.controls.reserve(static_cast<std::size_t>(N));
  result.stage_ms.reserve(static_cast<std::size_t>(N));
  result.stage_candidates.reserve(static_cast<std::size_t>(N));

  CostToGoCache<S, U> cache(N);
  S x = x0;
  result.trajectory.states.push_back(x);

  for (int k = 0; k < N; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const U incumbent = policy.stage_maps[static_cast<std::size_t>(k)](x);
    auto tail = [&](const S& y) { return cache.evaluate(problem, policy, y, k + 1); };

    U chosen = incumbent;
    int evaluated = 0;

    if (builder.kind == BuilderKind::multiagent) {
      if constexpr (std::is_same_v<U, std::vector<double>>) {
        chosen = multiagent_minimize(problem, k, x, incumbent, std::function<double(const S&)>(tail), tie_tol,
                                     builder.multiagent, rng, &evaluated);
      } else {
        throw ConfigError("multiagent builder requires real-vector controls");
      }
    } else {
      if (!problem.control_feasible(k, x, incumbent)) {
        throw IncumbentExclusionError("incumbent control is infeasible at stage " + std::to_string(k));
      }
      const std::vector<U> candidates = builder.build(k, x, incumbent, rng);
      const std::string inc_enc = problem.encode_control(incumbent);

      double best = std::numeric_limits<double>::infinity();
      const U* best_u = nullptr;
      double q_inc = 0.0;
      bool saw_incumbent = false;
      for (const U& u : candidates) {
        if (!problem.control_feasible(k, x, u)) {
          throw InfeasibleCandidateError("builder produced an infeasible candidate at stage " +
                                         std::to_string(k));
        }
        const double q = problem.stage_cost(k, x, u) + tail(problem.dynamics(k, x, u));
        ++evaluated;
        if (problem.encode_control(u) == inc_enc) {
          saw_incumbent = true;
          q_inc = q;
        }
        if (best_u == nullptr || q < best) {
          best = q;
          best_u = &u;
        }
      }
      if (!saw_incumbent) {
        throw IncumbentExclusionError("candidate set does not contain the incumbent at stage " +
                                      std::to_string(k));
      }
      if (!std::isfinite(best)) {
        throw InfeasibleControlError("no candidate admits a feasible continuation at stage " +
                                     std::to_string(k));
      }
      const double slack = tie_tol * std::max(1.0, std::abs(best));
      chosen = (q_inc <= best + slack) ? incumbent : *best_u;
    }

    x = problem.dynamics(k, x, chosen);
    result.trajectory.controls.push_back(std::move(chosen));
    result.trajectory.states.push_back(x);

    const auto t1 = std::chrono::steady_clock::now();
    result.stage_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    result.stage_candidates.push_back(evaluated);
  }
  return result;
}

template <class S, class U>
struct IterationEntry {
  int iteration = 0;
  Trajectory<S, U> trajectory;
  double cost = 0.0;
  double stage_time_mean_ms = 0.0;
  double stage_time_std_ms = 0.0;
  bool consistency_ok = true;
  bool improvement_violation = false;
  std::vector<int> stage_candidates;
};

template <class S, class U>
struct IterationHistory {
  std::vector<IterationEntry<S, U>> entries;
  bool halted_fixed_point = false;

  std::vector<double> costs() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.cost);
    return out;
  }

  bool any_improvement_violation() const {
    for (const auto& e : entries) {
      if (e.improvement_violation) return true;
    }
    return false;
  }
};

struct OnlinePiOptions {
  int max_iters = 20;
  double tie_tol = 0.0;  // 0 gives exact tie comparison (discrete domains)
  std::uint64_t seed = 0;
  bool allow_inconsistent = false;
};

namespace detail {

inline void fill_time_stats(const std::vector<double>& ms, double& mean, double& stddev) {
  if (ms.empty()) {
    mean = stddev = 0.0;
    return;
  }
  double sum = 0.0;
  for (double v : ms) sum += v;
  mean = sum / static_cast<double>(ms.size());
  double var = 0.0;
  for (double v : ms) var += (v - mean) * (v - mean);
  stddev = std::sqrt(var / static_cast<double>(ms.size()));
}

}  // namespace detail

// The on-line PI loop: rollout of pi0, then alternating trajectory
// improvement and generator application. Each entry records the rollout cost
// J_{pi_l}(x0) of the generated policy; for a consistent generator this equals
// the improved trajectory's cost, so the sequence is nonincreasing. The loop
// halts early at a fixed point (two successive equal costs with identical
// trajectories) only for deterministic generators; stochastic runs continue to
// max_iters. A failed consistency check aborts with ConsistencyError unless
// allow_inconsistent is set, in which case the violation is recorded and the
// run continues.
template <class S, class U>
IterationHistory<S, U> run_online_pi(const ControlProblem<S, U>& problem, const S& x0, const Policy<S, U>& pi0,
                                     const Generator<S, U>& generator, const ControlSetBuilder<S, U>& builder,
                                     const OnlinePiOptions& opt) {
  Rng root(opt.seed);
  Rng builder_rng = root.stream("builder");
  Rng generator_rng = root.stream("generator");
  Rng probe_rng = root.stream("consistency-probe");

  IterationHistory<S, U> history;

  Trajectory<S, U> traj = rollout_policy(problem, pi0, x0);
  {
    IterationEntry<S, U> e;
    e.iteration = 0;
    e.trajectory = traj;
    e.cost = trajectory_cost(problem, traj);
    const ConsistencyReport probe = check_consistency(problem, generator, traj, probe_rng.next_u64());
    e.consistency_ok = probe.consistent;
    if (!probe.consistent && !opt.allow_inconsistent) {
      throw ConsistencyError("generator failed the consistency check on the initial rollout at stage " +
                             std::to_string(probe.first_failure));
    }
    history.entries.push_back(std::move(e));
  }

  Policy<S, U> policy = pi0;
  for (int ell = 1; ell <= opt.max_iters; ++ell) {
    Rng iter_rng = builder_rng.stream(static_cast<std::uint64_t>(ell));
    ImproveResult<S, U> improved = improve_trajectory(problem, policy, x0, builder, opt.tie_tol, iter_rng);

    Rng gen_rng = generator_rng.stream(static_cast<std::uint64_t>(ell));
    Policy<S, U> next = generator.generate(improved.trajectory, gen_rng);

    const ConsistencyReport report = check_policy_consistency(problem, next, improved.trajectory);
    if (!report.consistent && !opt.allow_inconsistent) {
      throw ConsistencyError("generated policy failed the consistency check at stage " +
                             std::to_string(report.first_failure));
    }

    IterationEntry<S, U> e;
    e.iteration = ell;
    // A consistent policy replays the improved trajectory from x0 exactly, so
    // the rollout is only needed when consistency failed.
    e.trajectory = report.consistent ? std::move(improved.trajectory) : rollout_policy(problem, next, x0);
    e.cost = trajectory_cost(problem, e.trajectory);
    e.consistency_ok = report.consistent;
    e.stage_candidates = std::move(improved.stage_candidates);
    detail::fill_time_stats(improved.stage_ms, e.stage_time_mean_ms, e.stage_time_std_ms);

    const double prev_cost = history.entries.back().cost;
    const double slack = opt.tie_tol * std::max(1.0, std::abs(prev_cost));
    e.improvement_violation = e.cost > prev_cost + slack;

    const bool costs_equal = std::abs(e.cost - prev_cost) <= slack;
    const bool same_traj =
        encode_trajectory(problem, e.trajectory) == encode_trajectory(problem, history.entries.back().trajectory);
    history.entries.push_back(std::move(e));

    if (!generator.stochastic && costs_equal && same_traj) {
      history.halted_fixed_point = true;
      break;
    }
    policy = std::move(next);
  }
  return history;
}

// Builder over the full enumerated control set U_k(x_k).
template <class S, class U>
ControlSetBuilder<S, U> full_enumeration_builder(const ControlProblem<S, U>& problem) {
  if (!problem.can_enumerate()) {
    throw EnumerationError("full builder requires enumerable control sets");
  }
  ControlSetBuilder<S, U> b;
  b.kind = BuilderKind::full;
  auto enumerate = problem.enumerate_controls;
  b.build = [enumerate](int k, const S& x, const U&, Rng&) { return enumerate(k, x); };
  return b;
}

// Restricted builder: `count` controls sampled uniformly from the enumerated
// set, plus the incumbent (always first).
template <class S, class U>
ControlSetBuilder<S, U> restricted_subset_builder(const ControlProblem<S, U>& problem, int count) {
  if (!problem.can_enumerate()) {
    throw EnumerationError("restricted subset builder requires enumerable control sets");
  }
  ControlSetBuilder<S, U> b;
  b.kind = BuilderKind::restricted;
  auto enumerate = problem.enumerate_controls;
  b.build = [enumerate, count](int k, const S& x, const U& incumbent, Rng& rng) {
    std::vector<U> all = enumerate(k, x);
    std::vector<U> out;
    out.push_back(incumbent);
    for (int i = 0; i < count && !all.empty(); ++i) {
      out.push_back(all[static_cast<std::size_t>(rng.next_int(static_cast<int>(all.size())))]);
    }
    return out;
  };
  return b;
}

// Restricted builder for box-bounded real-vector controls: the incumbent plus
// `count` Gaussian perturbations clipped into the box.
template <class S>
ControlSetBuilder<S, std::vector<double>> gaussian_neighborhood_builder(
    const ControlProblem<S, std::vector<double>>& problem, int count, double sigma) {
  if (problem.control_lower.empty() || problem.control_upper.empty()) {
    throw ConfigError("gaussian neighborhood builder requires control box bounds");
  }
  ControlSetBuilder<S, std::vector<double>> b;
  b.kind = BuilderKind::restricted;
  const std::vector<double> lo = problem.control_lower;
  const std::vector<double> hi = problem.control_upper;
  b.build = [lo, hi, count, sigma](int, const S&, const std::vector<double>& incumbent, Rng& rng) {
    std::vector<std::vector<double>> out;
    out.push_back(incumbent);
    for (int i = 0; i < count; ++i) {
      std::vector<double> u = incumbent;
      for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = std::min(hi[j], std::max(lo[j], u[j] + sigma * rng.next_gaussian()));
      }
      out.push_back(std::move(u));
    }
    return out;
  };
  return b;
}

template <class S>
ControlSetBuilder<S, std::vector<double>> multiagent_builder(MultiagentConfig cfg) {
  cfg.validate();
  ControlSetBuilder<S, std::vector<double>> b;
  b.kind = BuilderKind::multiagent;
  b.multiagent = std::move(cfg);
  return b;
}

}  // namespace olpi
