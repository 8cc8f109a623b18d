#include "olpi/mda.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "olpi/encoding.hpp"
#include "olpi/generator.hpp"
#include "olpi/hungarian.hpp"

namespace olpi {

void to_json(nlohmann::json& j, const MdaState& s) {
  j = nlohmann::json{{"stage", s.stage}, {"paths", s.paths}};
}

void from_json(const nlohmann::json& j, MdaState& s) {
  j.at("stage").get_to(s.stage);
  j.at("paths").get_to(s.paths);
}

void to_json(nlohmann::json& j, const MdaControl& u) {
  j = nlohmann::json{{"matching", u.matching}};
}

void from_json(const nlohmann::json& j, MdaControl& u) {
  j.at("matching").get_to(u.matching);
}

MdaInstance MdaInstance::random(int num_stages, int num_nodes, std::uint64_t seed) {
  if (num_stages < 1 || num_nodes < 1) throw ConfigError("mda instance: N and m must be at least 1");
  MdaInstance inst;
  inst.n_ = num_stages;
  inst.m_ = num_nodes;
  inst.use_table_ = false;
  inst.seed_ = seed;
  inst.key_ = Rng::mix(seed ^ 0x6D64612D636F7374ULL);
  return inst;
}

MdaInstance MdaInstance::from_table(int num_stages, int num_nodes, std::vector<double> table) {
  if (num_stages < 1 || num_nodes < 1) throw ConfigError("mda instance: N and m must be at least 1");
  std::size_t expected = 1;
  for (int t = 0; t <= num_stages; ++t) expected *= static_cast<std::size_t>(num_nodes);
  if (table.size() != expected) {
    throw ConfigError("mda instance: cost_table must have m^(N+1) entries");
  }
  MdaInstance inst;
  inst.n_ = num_stages;
  inst.m_ = num_nodes;
  inst.use_table_ = true;
  inst.table_ = std::move(table);
  return inst;
}

std::size_t MdaInstance::table_index(std::span<const int> tuple) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int v : tuple) {
    idx += static_cast<std::size_t>(v) * stride;
    stride *= static_cast<std::size_t>(m_);
  }
  return idx;
}

double MdaInstance::grouping_cost(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != n_ + 1) {
    throw ShapeError("grouping cost requires an (N+1)-tuple");
  }
  if (use_table_) {
    return table_[table_index(tuple)];
  }
  std::uint64_t h = key_;
  for (int v : tuple) {
    h = Rng::mix(h ^ (static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL));
  }
  return Rng::to_unit(h);
}

nlohmann::json MdaInstance::to_json() const {
  nlohmann::json j{{"N", n_}, {"m", m_}};
  if (use_table_) {
    j["cost_table"] = table_;
  } else {
    j["seed"] = seed_;
  }
  return j;
}

MdaInstance MdaInstance::from_json(const nlohmann::json& j) {
  const int n = j.at("N").get<int>();
  const int m = j.at("m").get<int>();
  if (j.contains("cost_table")) {
    return from_table(n, m, j.at("cost_table").get<std::vector<double>>());
  }
  if (!j.contains("seed")) throw ConfigError("mda instance: need either seed or cost_table");
  return random(n, m, j.at("seed").get<std::uint64_t>());
}

MdaState mda_initial_state(int num_nodes) {
  MdaState s;
  s.stage = 0;
  s.paths.resize(static_cast<std::size_t>(num_nodes));
  for (int g = 0; g < num_nodes; ++g) s.paths[static_cast<std::size_t>(g)] = {g};
  return s;
}

namespace {

std::string encode_mda_state(const MdaState& s) {
  std::string out = encode_int(s.stage);
  for (const auto& path : s.paths) {
    out += encode_int(static_cast<int>(path.size()));
    out += encode_ints(path);
  }
  return out;
}

bool is_permutation_of_m(const std::vector<int>& v, int m) {
  if (static_cast<int>(v.size()) != m) return false;
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  for (int x : v) {
    if (x < 0 || x >= m || seen[static_cast<std::size_t>(x)]) return false;
    seen[static_cast<std::size_t>(x)] = 1;
  }
  return true;
}

// Sum of the m grouping costs in grouping order; every cost path in the MDA
// domain uses this same summation order, which is what makes the improvement
// chain exact in floating point.
double assignment_cost(const MdaInstance& inst, const std::vector<std::vector<int>>& paths) {
  double total = 0.0;
  for (const auto& path : paths) total += inst.grouping_cost(path);
  return total;
}

}  // namespace

ControlProblem<MdaState, MdaControl> mda_to_control_problem(const MdaInstance& instance) {
  auto inst = std::make_shared<const MdaInstance>(instance);
  const int m = inst->num_nodes();

  ControlProblem<MdaState, MdaControl> p;
  p.horizon = inst->num_stages();

  p.dynamics = [](int, const MdaState& x, const MdaControl& u) {
    MdaState next = x;
    next.stage = x.stage + 1;
    for (auto& path : next.paths) {
      path.push_back(u.matching[static_cast<std::size_t>(path.back())]);
    }
    return next;
  };
  p.stage_cost = [](int, const MdaState&, const MdaControl&) { return 0.0; };
  p.terminal_cost = [inst](const MdaState& x) { return assignment_cost(*inst, x.paths); };
  p.enumerate_controls = [m](int, const MdaState&) {
    std::vector<MdaControl> out;
    std::vector<int> perm(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    do {
      out.push_back(MdaControl{perm});
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
  };
  p.control_feasible = [m](int, const MdaState&, const MdaControl& u) {
    return is_permutation_of_m(u.matching, m);
  };
  p.encode_state = [](const MdaState& x) { return encode_mda_state(x); };
  p.encode_control = [](const MdaControl& u) { return encode_ints(u.matching); };
  return p;
}

Trajectory<MdaState, MdaControl> random_mda_trajectory(const MdaInstance& instance, Rng& rng) {
  const auto problem = mda_to_control_problem(instance);
  Trajectory<MdaState, MdaControl> traj;
  MdaState x = mda_initial_state(instance.num_nodes());
  traj.states.push_back(x);
  for (int k = 0; k < instance.num_stages(); ++k) {
    MdaControl u{random_permutation(instance.num_nodes(), rng)};
    x = problem.dynamics(k, x, u);
    traj.controls.push_back(std::move(u));
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory<MdaState, MdaControl> mda_improvement_sweep(const MdaInstance& instance,
                                                       const Trajectory<MdaState, MdaControl>& current) {
  const int N = instance.num_stages();
  const int m = instance.num_nodes();
  const auto problem = mda_to_control_problem(instance);
  if (current.horizon() != N) throw ShapeError("mda sweep: trajectory horizon mismatch");

  Trajectory<MdaState, MdaControl> next;
  MdaState state = mda_initial_state(m);
  next.states.push_back(state);

  // tail[j] = node sequence from layer k+1 to layer N reached by following the
  // current trajectory's matchings starting at layer-(k+1) node j.
  for (int k = 0; k < N; ++k) {
    std::vector<std::vector<int>> tails(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      std::vector<int>& tail = tails[static_cast<std::size_t>(j)];
      tail.push_back(j);
      int node = j;
      for (int t = k + 1; t < N; ++t) {
        node = current.controls[static_cast<std::size_t>(t)].matching[static_cast<std::size_t>(node)];
        tail.push_back(node);
      }
    }

    // Row i = layer-k node i; grouping_of[i] = grouping whose prefix ends at i.
    std::vector<int> grouping_of(static_cast<std::size_t>(m), -1);
    for (int g = 0; g < m; ++g) {
      grouping_of[static_cast<std::size_t>(state.paths[static_cast<std::size_t>(g)].back())] = g;
    }

    std::vector<std::vector<double>> cost(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m)));
    double max_abs = 0.0;
    std::vector<int> tuple;
    for (int i = 0; i < m; ++i) {
      const int g = grouping_of[static_cast<std::size_t>(i)];
      for (int j = 0; j < m; ++j) {
        tuple = state.paths[static_cast<std::size_t>(g)];
        tuple.insert(tuple.end(), tails[static_cast<std::size_t>(j)].begin(), tails[static_cast<std::size_t>(j)].end());
        const double c = instance.grouping_cost(tuple);
        cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c;
        max_abs = std::max(max_abs, std::abs(c));
      }
    }

    const std::vector<int>& incumbent = current.controls[static_cast<std::size_t>(k)].matching;

    // Bias the incumbent arcs by a tie epsilon so the solver prefers them
    // among exact ties, then decide against the unmodified matrix.
    std::vector<std::vector<double>> biased = cost;
    const double eps = 1e-12 * std::max(1.0, max_abs);
    for (int i = 0; i < m; ++i) {
      biased[static_cast<std::size_t>(i)][static_cast<std::size_t>(incumbent[static_cast<std::size_t>(i)])] -= eps;
    }
    const AssignmentResult solved = hungarian_2d_assignment(biased);

    // Exact comparison of the two complete-assignment costs, both summed in
    // grouping order over the unmodified matrix.
    double sum_solved = 0.0;
    double sum_incumbent = 0.0;
    for (int g = 0; g < m; ++g) {
      const int i = state.paths[static_cast<std::size_t>(g)].back();
      sum_solved += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(solved.assignment[static_cast<std::size_t>(i)])];
      sum_incumbent += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(incumbent[static_cast<std::size_t>(i)])];
    }
    const MdaControl chosen{sum_solved < sum_incumbent ? solved.assignment : incumbent};

    state = problem.dynamics(k, state, chosen);
    next.controls.push_back(chosen);
    next.states.push_back(state);
  }
  return next;
}

std::pair<double, std::vector<std::vector<int>>> brute_force_mda(const MdaInstance& instance, long long cap) {
  const int N = instance.num_stages();
  const int m = instance.num_nodes();

  std::vector<std::vector<int>> perms;
  {
    std::vector<int> perm(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    do {
      perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  const long long fact = static_cast<long long>(perms.size());
  long long total = 1;
  for (int t = 0; t < N; ++t) {
    if (total > cap / fact) {
      throw CapExceededError("brute force would enumerate more than " + std::to_string(cap) +
                             " assignments ((m!)^N with m! = " + std::to_string(fact) + ")");
    }
    total *= fact;
  }

  // Layer-t bijection phi_t: grouping g -> node phi_t(g); phi_0 is fixed to
  // the identity since groupings are labeled by their layer-0 node.
  std::vector<std::size_t> choice(static_cast<std::size_t>(N), 0);
  std::vector<std::vector<int>> paths(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(N) + 1));
  std::vector<std::vector<int>> best_paths;
  double best_cost = 0.0;
  bool have_best = false;

  while (true) {
    for (int g = 0; g < m; ++g) {
      paths[static_cast<std::size_t>(g)][0] = g;
      for (int t = 1; t <= N; ++t) {
        paths[static_cast<std::size_t>(g)][static_cast<std::size_t>(t)] =
            perms[choice[static_cast<std::size_t>(t) - 1]][static_cast<std::size_t>(g)];
      }
    }
    double total_cost = 0.0;
    for (const auto& path : paths) total_cost += instance.grouping_cost(path);
    if (!have_best || total_cost < best_cost) {
      have_best = true;
      best_cost = total_cost;
      best_paths = paths;
    }
    // odometer over the N layer bijections
    int t = 0;
    for (; t < N; ++t) {
      choice[static_cast<std::size_t>(t)] += 1;
      if (choice[static_cast<std::size_t>(t)] < perms.size()) break;
      choice[static_cast<std::size_t>(t)] = 0;
    }
    if (t == N) break;
  }
  return {best_cost, std::move(best_paths)};
}

IterationHistory<MdaState, MdaControl> run_mda_online_pi(const MdaInstance& instance,
                                                         const Trajectory<MdaState, MdaControl>& initial,
                                                         int max_iters) {
  const auto problem = mda_to_control_problem(instance);
  IterationHistory<MdaState, MdaControl> history;

  {
    IterationEntry<MdaState, MdaControl> e;
    e.iteration = 0;
    e.trajectory = initial;
    e.cost = trajectory_cost(problem, initial);
    e.consistency_ok = true;  // tabular replay is consistent by construction
    history.entries.push_back(std::move(e));
  }

  for (int ell = 1; ell <= max_iters; ++ell) {
    const auto& prev = history.entries.back();

    std::vector<double> stage_ms;
    stage_ms.reserve(static_cast<std::size_t>(instance.num_stages()));
    const auto t0 = std::chrono::steady_clock::now();
    Trajectory<MdaState, MdaControl> improved = mda_improvement_sweep(instance, prev.trajectory);
    const auto t1 = std::chrono::steady_clock::now();
    const double total_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    stage_ms.assign(static_cast<std::size_t>(instance.num_stages()),
                    total_ms / static_cast<double>(instance.num_stages()));

    IterationEntry<MdaState, MdaControl> e;
    e.iteration = ell;
    e.cost = trajectory_cost(problem, improved);
    e.trajectory = std::move(improved);
    e.consistency_ok = true;
    detail::fill_time_stats(stage_ms, e.stage_time_mean_ms, e.stage_time_std_ms);
    e.improvement_violation = e.cost > prev.cost;

    const bool fixed_point =
        e.cost == prev.cost &&
        encode_trajectory(problem, e.trajectory) == encode_trajectory(problem, prev.trajectory);
    history.entries.push_back(std::move(e));
    if (fixed_point) {
      history.halted_fixed_point = true;
      break;
    }
  }
  return history;
}

}  // namespace olpi
