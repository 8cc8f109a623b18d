#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "olpi/errors.hpp"
#include "olpi/experiment.hpp"
#include "olpi/serialization.hpp"
#include "olpi/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& output_override, bool allow_inconsistent) {
  const auto path = olpi::find_config_file(config_path);
  olpi::ExperimentConfig cfg = olpi::ExperimentConfig::from_json(nlohmann::json::parse(olpi::read_text(path)));
  if (!output_override.empty()) cfg.output_dir = output_override;
  if (allow_inconsistent) cfg.allow_inconsistent = true;

  const olpi::RunResult result = olpi::run_experiment(cfg);
  std::printf("run complete: %s\n", result.dir.string().c_str());
  std::printf("  iterations recorded: %zu\n", result.costs.size());
  std::printf("  initial cost: %s\n", olpi::format_double(result.costs.front()).c_str());
  std::printf("  final cost:   %s\n", olpi::format_double(result.costs.back()).c_str());
  std::printf("  monotone: %s   fixed point: %s\n", result.monotone ? "yes" : "NO",
              result.halted_fixed_point ? "yes" : "no");
  return result.exit_status;
}

int cmd_verify(const std::string& suite_name, double budget) {
  olpi::VerifySuite suite = olpi::VerifySuite::all;
  if (suite_name == "oracle") {
    suite = olpi::VerifySuite::oracle;
  } else if (suite_name == "invariants") {
    suite = olpi::VerifySuite::invariants;
  } else if (suite_name != "all") {
    std::fprintf(stderr, "unknown suite '%s' (expected oracle|invariants|all)\n", suite_name.c_str());
    return 2;
  }
  const olpi::VerifyReport report = olpi::run_verify(suite, budget);
  std::fputs(olpi::verify_table(report).c_str(), stdout);
  std::printf("%d check(s) failed\n", report.failures());
  return report.all_passed() ? 0 : 1;
}

int cmd_demo_fig1(bool allow_inconsistent, const std::string& out_dir) {
  const olpi::RunResult result = olpi::run_demo_fig1(allow_inconsistent, out_dir);
  std::printf("demo artifacts: %s\n", result.dir.string().c_str());
  std::printf("  consistent-generator costs:");
  for (double c : result.costs) std::printf(" %g", c);
  std::printf("\n  fixed point: %s\n", result.halted_fixed_point ? "yes" : "no");
  if (allow_inconsistent) {
    std::printf("  inconsistent generator: monotonicity %s (see metadata.json)\n",
                result.monotone ? "ok" : "violated");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"on-line policy iteration experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  bool run_allow_inconsistent = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--output", output_override, "override the config's output directory");
  run->add_flag("--allow-inconsistent", run_allow_inconsistent,
                "record consistency violations instead of aborting");

  std::string suite = "all";
  double budget = 120.0;
  auto* verify = app.add_subcommand("verify", "run the oracle/invariant suites");
  verify->add_option("--suite", suite, "oracle | invariants | all")->capture_default_str();
  verify->add_option("--budget", budget, "time budget in seconds")->capture_default_str();

  auto* demo = app.add_subcommand("demo", "bundled demonstrations");
  bool demo_allow_inconsistent = false;
  std::string demo_out = "demo_fig1";
  auto* fig1 = demo->add_subcommand("fig1", "five-node graph: consistency and the improvement property");
  fig1->add_flag("--allow-inconsistent", demo_allow_inconsistent,
                 "also run the deliberately inconsistent generator");
  fig1->add_option("--output", demo_out, "output directory")->capture_default_str();
  demo->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output_override, run_allow_inconsistent);
    if (verify->parsed()) return cmd_verify(suite, budget);
    if (demo->parsed() && fig1->parsed()) return cmd_demo_fig1(demo_allow_inconsistent, demo_out);
    std::fprintf(stderr, "no subcommand\n");
    return 2;
  } catch (const olpi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const olpi::ConsistencyError& e) {
    std::fprintf(stderr, "consistency violation: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
