#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olpi/encoding.hpp"
#include "olpi/online_pi.hpp"
#include "olpi/problem.hpp"

namespace olpi {

// Shortest exact decimal form of a double; round-trips bit-for-bit.
std::string format_double(double v);

// Writes text via a temp file in the same directory, then renames into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

// Trajectory <-> JSON: an array of {k, state, control} records plus a final
// {k: N, state} record for the terminal state. S and U must have nlohmann
// to_json/from_json overloads.
template <class S, class U>
nlohmann::json trajectory_to_json(const Trajectory<S, U>& traj) {
  nlohmann::json arr = nlohmann::json::array();
  for (int k = 0; k < traj.horizon(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    arr.push_back({{"k", k}, {"state", traj.states[ks]}, {"control", traj.controls[ks]}});
  }
  arr.push_back({{"k", traj.horizon()}, {"state", traj.states.back()}});
  return arr;
}

template <class S, class U>
Trajectory<S, U> trajectory_from_json(const nlohmann::json& arr) {
  Trajectory<S, U> traj;
  for (const auto& rec : arr) {
    traj.states.push_back(rec.at("state").get<S>());
    if (rec.contains("control")) {
      traj.controls.push_back(rec.at("control").get<U>());
    }
  }
  if (traj.states.size() != traj.controls.size() + 1) {
    throw ShapeError("trajectory JSON must contain N control records plus a terminal state");
  }
  return traj;
}

// CSV with columns (stage, state_encoding, value); encodings are hex strings.
std::string cost_table_csv(const CostToGoTable& table);

// CSV with columns (iteration, cost, stage_time_mean_ms, stage_time_std_ms).
template <class S, class U>
std::string history_csv(const IterationHistory<S, U>& history) {
  std::string out = "iteration,cost,stage_time_mean_ms,stage_time_std_ms\n";
  for (const auto& e : history.entries) {
    out += std::to_string(e.iteration);
    out += ',';
    out += format_double(e.cost);
    out += ',';
    out += format_double(e.stage_time_mean_ms);
    out += ',';
    out += format_double(e.stage_time_std_ms);
    out += '\n';
  }
  return out;
}

// CSV with columns (iteration, cost); the fully deterministic view.
template <class S, class U>
std::string costs_csv(const IterationHistory<S, U>& history) {
  std::string out = "iteration,cost\n";
  for (const auto& e : history.entries) {
    out += std::to_string(e.iteration);
    out += ',';
    out += format_double(e.cost);
    out += '\n';
  }
  return out;
}

}  // namespace olpi
