#include "olpi/experiment.hpp"

#include <cstdlib>
#include <numeric>

#include "olpi/drone.hpp"
#include "olpi/enumerable_instance.hpp"
#include "olpi/exact_dp.hpp"
#include "olpi/graph_problem.hpp"
#include "olpi/mda.hpp"
#include "olpi/online_pi.hpp"
#include "olpi/residual.hpp"
#include "olpi/serialization.hpp"

namespace olpi {

namespace {

std::string to_string(Domain d) {
  switch (d) {
    case Domain::mda: return "mda";
    case Domain::drone: return "drone";
    case Domain::multi_drone: return "multi-drone";
    case Domain::custom_enumerable: return "custom-enumerable";
  }
  return "?";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::simplified: return "simplified";
    case Variant::multiagent: return "multiagent";
    case Variant::multiagent_permuted: return "multiagent-permuted";
  }
  return "?";
}

std::string to_string(GeneratorKind g) {
  return g == GeneratorKind::tabular ? "tabular" : "residual";
}

Domain domain_from_string(const std::string& s) {
  if (s == "mda") return Domain::mda;
  if (s == "drone") return Domain::drone;
  if (s == "multi-drone") return Domain::multi_drone;
  if (s == "custom-enumerable") return Domain::custom_enumerable;
  throw ConfigError("config field 'domain': unknown value '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "simplified") return Variant::simplified;
  if (s == "multiagent") return Variant::multiagent;
  if (s == "multiagent-permuted") return Variant::multiagent_permuted;
  throw ConfigError("config field 'variant': unknown value '" + s + "'");
}

GeneratorKind generator_from_string(const std::string& s) {
  if (s == "tabular") return GeneratorKind::tabular;
  if (s == "residual") return GeneratorKind::residual;
  throw ConfigError("config field 'generator': unknown value '" + s + "'");
}

std::string iter_name(int iteration) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", iteration);
  return buf;
}

std::string drone_name(int drone) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", drone);
  return buf;
}

template <class S, class U>
bool monotone_costs(const IterationHistory<S, U>& history, double tie_tol) {
  for (std::size_t i = 1; i < history.entries.size(); ++i) {
    const double prev = history.entries[i - 1].cost;
    const double slack = tie_tol * std::max(1.0, std::abs(prev));
    if (history.entries[i].cost > prev + slack) return false;
  }
  return true;
}

template <class S, class U>
nlohmann::json history_metadata(const IterationHistory<S, U>& history) {
  nlohmann::json consistency = nlohmann::json::array();
  nlohmann::json candidates = nlohmann::json::array();
  double mean_ms = 0.0;
  int timed = 0;
  for (const auto& e : history.entries) {
    consistency.push_back(e.consistency_ok);
    if (!e.stage_candidates.empty()) {
      candidates.push_back(std::accumulate(e.stage_candidates.begin(), e.stage_candidates.end(), 0));
    }
    if (e.iteration > 0) {
      mean_ms += e.stage_time_mean_ms;
      ++timed;
    }
  }
  nlohmann::json j;
  j["consistency_checks"] = consistency;
  j["halted_fixed_point"] = history.halted_fixed_point;
  j["iterations_recorded"] = history.entries.size();
  if (!candidates.empty()) j["candidates_per_iteration"] = candidates;
  j["stage_time_mean_ms_over_iterations"] = timed > 0 ? mean_ms / timed : 0.0;
  return j;
}

struct ArtifactWriter {
  std::filesystem::path dir;

  void write(const std::string& name, const std::string& content) const {
    write_text_atomic(dir / name, content);
  }
};

std::filesystem::path prepare_output_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  if (dir.is_relative()) dir = default_output_root() / dir;
  std::filesystem::create_directories(dir);
  return dir;
}

nlohmann::json base_metadata(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["config"] = cfg.to_json();
  j["config_hash"] = config_hash(cfg.to_json());
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.domain = domain_from_string(j.at("domain").get<std::string>());
    cfg.variant = variant_from_string(j.value("variant", "standard"));
    cfg.generator = generator_from_string(j.at("generator").get<std::string>());
    cfg.iterations = j.at("iterations").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const double default_tol = (cfg.domain == Domain::drone || cfg.domain == Domain::multi_drone) ? 1e-9 : 0.0;
    cfg.tie_tol = j.value("tie_tol", default_tol);
    cfg.allow_inconsistent = j.value("allow_inconsistent", false);
    cfg.params = j.value("params", nlohmann::json::object());
    cfg.output_dir = j.value("output_dir", "run");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (cfg.iterations < 1) throw ConfigError("config field 'iterations' must be at least 1");
  if (cfg.tie_tol < 0.0) throw ConfigError("config field 'tie_tol' must be nonnegative");
  if (cfg.domain == Domain::mda && cfg.generator != GeneratorKind::tabular) {
    throw ConfigError("config: domain 'mda' requires generator 'tabular'");
  }
  if ((cfg.domain == Domain::drone || cfg.domain == Domain::multi_drone) &&
      cfg.generator != GeneratorKind::residual) {
    throw ConfigError("config: drone domains require generator 'residual'");
  }
  if (cfg.domain == Domain::mda && cfg.variant != Variant::standard) {
    throw ConfigError("config: domain 'mda' runs the standard variant (full per-stage assignment)");
  }
  if ((cfg.domain == Domain::drone || cfg.domain == Domain::multi_drone) && cfg.variant == Variant::standard) {
    throw ConfigError("config: drone domains need a simplified or multiagent variant");
  }
  if (cfg.domain == Domain::custom_enumerable && cfg.generator != GeneratorKind::tabular) {
    throw ConfigError("config: domain 'custom-enumerable' requires generator 'tabular'");
  }
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{{"domain", to_string(domain)},
                        {"variant", to_string(variant)},
                        {"generator", to_string(generator)},
                        {"iterations", iterations},
                        {"seed", seed},
                        {"tie_tol", tie_tol},
                        {"allow_inconsistent", allow_inconsistent},
                        {"params", params},
                        {"output_dir", output_dir}};
}

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv("OLPI_OUTPUT_ROOT")) {
    return std::filesystem::path(root);
  }
  return std::filesystem::current_path();
}

std::filesystem::path find_config_file(const std::string& name) {
  std::vector<std::filesystem::path> tried;
  const std::filesystem::path direct(name);
  if (std::filesystem::exists(direct)) return direct;
  tried.push_back(direct);
  if (const char* env = std::getenv("OLPI_CONFIG_DIR")) {
    const auto p = std::filesystem::path(env) / name;
    if (std::filesystem::exists(p)) return p;
    tried.push_back(p);
  }
#ifdef OLPI_SOURCE_CONFIG_DIR
  {
    const auto p = std::filesystem::path(OLPI_SOURCE_CONFIG_DIR) / name;
    if (std::filesystem::exists(p)) return p;
    tried.push_back(p);
  }
#endif
#ifdef OLPI_INSTALL_CONFIG_DIR
  {
    const auto p = std::filesystem::path(OLPI_INSTALL_CONFIG_DIR) / name;
    if (std::filesystem::exists(p)) return p;
    tried.push_back(p);
  }
#endif
  std::string msg = "config file '" + name + "' not found; tried:";
  for (const auto& p : tried) msg += " " + p.string();
  throw ConfigError(msg);
}

std::string config_hash(const nlohmann::json& j) {
  const std::string dump = j.dump();
  const std::uint64_t h = Rng::hash_bytes(dump);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

RunResult run_mda_experiment(const ExperimentConfig& cfg) {
  MdaInstance instance = [&] {
    if (cfg.params.contains("instance_file")) {
      const auto path = find_config_file(cfg.params.at("instance_file").get<std::string>());
      return MdaInstance::from_json(nlohmann::json::parse(read_text(path)));
    }
    if (!cfg.params.contains("N") || !cfg.params.contains("m")) {
      throw ConfigError("config field 'params': mda needs N and m (or instance_file)");
    }
    return MdaInstance::random(cfg.params.at("N").get<int>(), cfg.params.at("m").get<int>(),
                               cfg.params.value("instance_seed", cfg.seed));
  }();
  const bool oracle = cfg.params.value("oracle", false);

  Rng traj_rng = Rng(cfg.seed).stream("initial-trajectory");
  const auto initial = random_mda_trajectory(instance, traj_rng);
  const auto history = run_mda_online_pi(instance, initial, cfg.iterations);

  const ArtifactWriter out{prepare_output_dir(cfg)};
  out.write("history.csv", history_csv(history));
  out.write("costs.csv", costs_csv(history));
  for (const auto& e : history.entries) {
    out.write("traj_iter" + iter_name(e.iteration) + ".json", trajectory_to_json(e.trajectory).dump(2) + "\n");
  }

  nlohmann::json meta = base_metadata(cfg);
  meta.update(history_metadata(history));
  meta["instance"] = instance.to_json();
  meta["cost_model"] =
      instance.has_table() ? "explicit table" : "uniform [0,1) from a counter PRF of (seed, tuple)";

  std::string results = oracle ? "iteration,cost,gap_percent\n" : "iteration,cost,cost_ratio_percent\n";
  double optimal = 0.0;
  if (oracle) {
    optimal = brute_force_mda(instance, cfg.params.value("brute_force_cap", 10'000'000LL)).first;
    meta["optimal_cost"] = optimal;
  }
  const double initial_cost = history.entries.front().cost;
  for (const auto& e : history.entries) {
    results += std::to_string(e.iteration);
    results += ',';
    results += format_double(e.cost);
    results += ',';
    results += format_double(oracle ? 100.0 * (e.cost - optimal) / optimal : 100.0 * e.cost / initial_cost);
    results += '\n';
  }
  out.write("results.csv", results);

  RunResult result;
  result.dir = out.dir;
  result.costs = history.costs();
  result.monotone = monotone_costs(history, 0.0);
  result.halted_fixed_point = history.halted_fixed_point;
  meta["monotonicity"] = result.monotone ? "ok" : "violated";
  out.write("metadata.json", meta.dump(2) + "\n");
  return result;
}

RunResult run_drone_experiment(const ExperimentConfig& cfg) {
  if (!cfg.params.contains("scenario")) {
    throw ConfigError("config field 'params.scenario' is required for drone domains");
  }
  const DroneScenario scenario = build_scenario(find_config_file(cfg.params.at("scenario").get<std::string>()));
  if (cfg.domain == Domain::drone && scenario.num_drones != 1) {
    throw ConfigError("config: domain 'drone' requires a single-drone scenario");
  }
  if (cfg.domain == Domain::multi_drone && scenario.num_drones < 2) {
    throw ConfigError("config: domain 'multi-drone' requires at least two drones");
  }

  const auto problem = make_drone_problem(scenario);
  const auto pi0 = heuristic_base_policy(scenario);
  const auto generator = make_residual_generator(problem, scenario.sampling, scenario.training);

  ControlSetBuilder<DroneState, DroneControl> builder;
  if (cfg.variant == Variant::simplified) {
    const double sigma = scenario.sampling.control_sigma.empty() ? 0.1 : scenario.sampling.control_sigma[0];
    builder = gaussian_neighborhood_builder(problem, scenario.sampling.control_candidates, sigma);
  } else {
    MultiagentConfig ma = scenario.multiagent;
    ma.order = cfg.variant == Variant::multiagent_permuted ? MultiagentConfig::Order::permuted
                                                           : MultiagentConfig::Order::fixed;
    builder = multiagent_builder<DroneState>(ma);
  }

  OnlinePiOptions opt;
  opt.max_iters = cfg.iterations;
  opt.tie_tol = cfg.tie_tol;
  opt.seed = cfg.seed;
  opt.allow_inconsistent = cfg.allow_inconsistent;
  const auto history = run_online_pi(problem, scenario.initial_state(), pi0, generator, builder, opt);

  const ArtifactWriter out{prepare_output_dir(cfg)};
  out.write("history.csv", history_csv(history));
  out.write("costs.csv", costs_csv(history));
  for (const auto& e : history.entries) {
    for (int d = 0; d < scenario.num_drones; ++d) {
      out.write("traj_iter" + iter_name(e.iteration) + "_drone" + drone_name(d) + ".csv",
                drone_trajectory_csv(scenario, e.trajectory, d));
    }
  }

  nlohmann::json meta = base_metadata(cfg);
  meta.update(history_metadata(history));
  meta["scenario"] = scenario.name;
  meta["obstacles"] = scenario.obstacle_count();
  meta["num_drones"] = scenario.num_drones;
  meta["separation_model"] = "pairwise barrier of the same potential-field form as obstacle repulsion";
  nlohmann::json reached = nlohmann::json::array();
  for (int d = 0; d < scenario.num_drones; ++d) {
    reached.push_back(reached_goal_box(scenario, history.entries.back().trajectory.states.back(), d));
  }
  meta["goal_box_reached"] = reached;

  RunResult result;
  result.dir = out.dir;
  result.costs = history.costs();
  result.monotone = monotone_costs(history, cfg.tie_tol);
  result.halted_fixed_point = history.halted_fixed_point;
  for (const auto& e : history.entries) {
    result.consistency_all_ok = result.consistency_all_ok && e.consistency_ok;
  }
  meta["monotonicity"] = result.monotone ? "ok" : "violated";
  out.write("metadata.json", meta.dump(2) + "\n");
  return result;
}

RunResult run_enumerable_experiment(const ExperimentConfig& cfg) {
  EnumerableInstanceSpec spec;
  spec.stages = cfg.params.value("stages", 4);
  spec.states_per_stage = cfg.params.value("states_per_stage", 5);
  spec.controls_per_state = cfg.params.value("controls_per_state", 3);
  spec.seed = cfg.params.value("instance_seed", cfg.seed);
  const bool oracle = cfg.params.value("oracle", false);

  const auto problem = make_random_enumerable_problem(spec);
  const auto pi0 = random_enumerable_policy(spec, Rng(cfg.seed).stream("initial-policy").next_u64());
  const auto generator = make_tabular_generator<int, int>();
  const auto builder = cfg.variant == Variant::simplified
                           ? restricted_subset_builder(problem, cfg.params.value("subset_size", 2))
                           : full_enumeration_builder(problem);

  OnlinePiOptions opt;
  opt.max_iters = cfg.iterations;
  opt.tie_tol = cfg.tie_tol;
  opt.seed = cfg.seed;
  opt.allow_inconsistent = cfg.allow_inconsistent;
  const auto history = run_online_pi(problem, 0, pi0, generator, builder, opt);

  const ArtifactWriter out{prepare_output_dir(cfg)};
  out.write("history.csv", history_csv(history));
  out.write("costs.csv", costs_csv(history));
  for (const auto& e : history.entries) {
    out.write("traj_iter" + iter_name(e.iteration) + ".json", trajectory_to_json(e.trajectory).dump(2) + "\n");
  }

  nlohmann::json meta = base_metadata(cfg);
  meta.update(history_metadata(history));
  if (oracle) {
    const auto solved = solve_dp(as_enumerable(problem, spec));
    meta["optimal_cost"] = solved.first.at(0, problem.encode_state(0));
  }

  RunResult result;
  result.dir = out.dir;
  result.costs = history.costs();
  result.monotone = monotone_costs(history, cfg.tie_tol);
  result.halted_fixed_point = history.halted_fixed_point;
  meta["monotonicity"] = result.monotone ? "ok" : "violated";
  out.write("metadata.json", meta.dump(2) + "\n");
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  switch (config.domain) {
    case Domain::mda: return run_mda_experiment(config);
    case Domain::drone:
    case Domain::multi_drone: return run_drone_experiment(config);
    case Domain::custom_enumerable: return run_enumerable_experiment(config);
  }
  throw ConfigError("config: unknown domain");
}

RunResult run_demo_fig1(bool allow_inconsistent, const std::filesystem::path& out_dir) {
  const GraphProblem graph = five_node_example();
  const auto problem = make_graph_control_problem(graph);
  const auto pi0 = five_node_initial_policy();
  const auto builder = full_enumeration_builder(problem);

  std::filesystem::path dir = out_dir;
  if (dir.is_relative()) dir = default_output_root() / dir;
  std::filesystem::create_directories(dir);
  const ArtifactWriter out{dir};

  OnlinePiOptions opt;
  opt.max_iters = 8;
  opt.tie_tol = 0.0;
  opt.seed = 0;

  const auto consistent = run_online_pi(problem, 0, pi0, make_tabular_generator<int, int>(), builder, opt);
  out.write("history_consistent.csv", history_csv(consistent));
  out.write("costs_consistent.csv", costs_csv(consistent));
  for (const auto& e : consistent.entries) {
    out.write("traj_consistent_iter" + iter_name(e.iteration) + ".json",
              trajectory_to_json(e.trajectory).dump(2) + "\n");
  }

  nlohmann::json meta;
  meta["seed"] = opt.seed;
  meta["consistent_run"] = history_metadata(consistent);
  meta["consistent_costs"] = consistent.costs();

  RunResult result;
  result.dir = dir;
  result.costs = consistent.costs();
  result.monotone = monotone_costs(consistent, 0.0);
  result.halted_fixed_point = consistent.halted_fixed_point;
  meta["monotonicity"] = result.monotone ? "ok" : "violated";

  if (allow_inconsistent) {
    OnlinePiOptions bad_opt = opt;
    bad_opt.max_iters = 4;
    bad_opt.allow_inconsistent = true;
    const auto violated = run_online_pi(problem, 0, pi0, five_node_inconsistent_generator(), builder, bad_opt);
    out.write("history_inconsistent.csv", history_csv(violated));
    out.write("costs_inconsistent.csv", costs_csv(violated));
    meta["inconsistent_run"] = history_metadata(violated);
    meta["inconsistent_costs"] = violated.costs();
    // The run with the inconsistent generator carries the headline verdict.
    result.monotone = monotone_costs(violated, 0.0);
    result.consistency_all_ok = false;
    meta["monotonicity"] = result.monotone ? "ok" : "violated";
  }

  out.write("metadata.json", meta.dump(2) + "\n");
  return result;
}

}  // namespace olpi
