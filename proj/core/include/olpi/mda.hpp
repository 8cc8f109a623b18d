#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olpi/online_pi.hpp"
#include "olpi/problem.hpp"
#include "olpi/rng.hpp"

namespace olpi {

// Partial solution of a multidimensional assignment instance: after stage k,
// each of the m groupings holds one node per layer 0..k. Grouping g starts at
// layer-0 node g.
struct MdaState {
  int stage = 0;
  std::vector<std::vector<int>> paths;  // paths[g][t] = node of layer t
};

// A stage control: a perfect matching between consecutive layers.
// matching[i] = j pairs layer-k node i with layer-(k+1) node j.
struct MdaControl {
  std::vector<int> matching;
};

void to_json(nlohmann::json& j, const MdaState& s);
void from_json(const nlohmann::json& j, MdaState& s);
void to_json(nlohmann::json& j, const MdaControl& u);
void from_json(const nlohmann::json& j, MdaControl& u);

// An (N+1)-layer assignment instance with m nodes per layer. Grouping costs
// are total over all (N+1)-tuples, backed either by an explicit dense table
// (small, exactly replayable instances) or by a counter-based pseudorandom
// function of (seed, tuple) drawing i.i.d. uniform [0,1) values, so large
// instances need no stored table.
class MdaInstance {
 public:
  static MdaInstance random(int num_stages, int num_nodes, std::uint64_t seed);
  static MdaInstance from_table(int num_stages, int num_nodes, std::vector<double> table);

  int num_stages() const { return n_; }    // N
  int num_nodes() const { return m_; }     // m per layer

  // Cost of one grouping, given its (N+1)-tuple of node indices.
  double grouping_cost(std::span<const int> tuple) const;

  bool has_table() const { return use_table_; }
  std::uint64_t seed() const { return seed_; }

  // Dense-table index of a tuple: sum_t tuple[t] * m^t.
  std::size_t table_index(std::span<const int> tuple) const;

  nlohmann::json to_json() const;
  static MdaInstance from_json(const nlohmann::json& j);

 private:
  MdaInstance() = default;
  int n_ = 0;
  int m_ = 0;
  bool use_table_ = false;
  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::vector<double> table_;
};

// The N-stage control-problem reduction: artificial initial state, state
// accumulation dynamics, zero stage costs, terminal cost equal to the sum of
// the m grouping costs. Control enumeration lists all m! matchings in
// lexicographic order (used by the oracles; the production path goes through
// the Hungarian sweep).
ControlProblem<MdaState, MdaControl> mda_to_control_problem(const MdaInstance& instance);

MdaState mda_initial_state(int num_nodes);

// Trajectory induced by uniformly random stage matchings.
Trajectory<MdaState, MdaControl> random_mda_trajectory(const MdaInstance& instance, Rng& rng);

// One on-line PI improvement pass specialized to the tabular replay
// generator: for each stage the m x m arc-cost matrix (new prefix to node i,
// arc (i,j), current-trajectory tail from node j) is solved as a
// two-dimensional assignment, preferring the incumbent matching under cost
// ties.
Trajectory<MdaState, MdaControl> mda_improvement_sweep(const MdaInstance& instance,
                                                       const Trajectory<MdaState, MdaControl>& current);

// Exhaustive minimum over all (N+1)-dimensional assignments, enumerated as
// per-layer grouping-to-node bijections (independent of the control-problem
// reduction). Returns the optimal cost and the m grouping tuples.
std::pair<double, std::vector<std::vector<int>>> brute_force_mda(const MdaInstance& instance,
                                                                 long long cap = 10'000'000);

// On-line PI driven by the Hungarian sweep, recording the same history as the
// generic engine. Costs compare exactly; the run halts at the first repeated
// cost after verifying the trajectories coincide.
IterationHistory<MdaState, MdaControl> run_mda_online_pi(const MdaInstance& instance,
                                                         const Trajectory<MdaState, MdaControl>& initial,
                                                         int max_iters);

}  // namespace olpi
