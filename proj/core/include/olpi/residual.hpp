#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olpi/generator.hpp"
#include "olpi/problem.hpp"
#include "olpi/rng.hpp"

namespace olpi {

using VecState = std::vector<double>;
using VecControl = std::vector<double>;
using VecProblem = ControlProblem<VecState, VecControl>;
using VecTrajectory = Trajectory<VecState, VecControl>;
using VecPolicy = Policy<VecState, VecControl>;

// Gaussian sampling around a trajectory. Scalars broadcast: a single entry in
// samples_per_stage (or a sigma vector) applies to every stage (coordinate).
struct SamplingParams {
  std::vector<int> samples_per_stage{5};   // q_k for k = 1..N-1
  int control_candidates = 5;              // n sampled controls per state
  std::vector<double> state_sigma{0.1};    // per state coordinate
  std::vector<double> control_sigma{0.1};  // per control coordinate

  int samples_at(int k) const {
    return samples_per_stage.size() == 1 ? samples_per_stage[0]
                                         : samples_per_stage[static_cast<std::size_t>(k) - 1];
  }
};

struct ReplaySample {
  int stage = 0;
  VecState state;      // sampled state x-bar
  VecControl control;  // selected good control u-bar
};

struct ReplayDataset {
  std::vector<ReplaySample> samples;
};

// Builds the supervised set {(x-bar_k^j, u-bar_k^j)}: states sampled around
// x_k, candidate controls sampled around u_k (the trajectory control itself is
// always candidate 0, so the candidate list is never empty), each scored by
// g_k + J_{k+1} under the intermediate replay policy mu-bar_k(x) = u_k.
// Requires state-independent control sets given by box bounds.
ReplayDataset collect_replay_dataset(const VecProblem& problem, const VecTrajectory& traj,
                                     const SamplingParams& params, std::uint64_t seed);

std::string replay_dataset_csv(const ReplayDataset& dataset);
ReplayDataset replay_dataset_from_csv(const std::string& csv);

struct TrainingConfig {
  int hidden = 32;
  int epochs = 60;
  int batch = 32;
  double learning_rate = 1e-3;
  bool zero_init = false;
};

// Small two-hidden-layer tanh network trained by mini-batch Adam on squared
// error. Deterministic given the seeds; no external dependencies.
class MlpRegressor {
 public:
  MlpRegressor(int input_dim, int output_dim, int hidden, std::uint64_t init_seed, bool zero_init);

  std::vector<double> forward(std::span<const double> input) const;

  // Returns the final epoch's mean loss; throws TrainingDivergenceError if the
  // loss turns non-finite.
  double train(const std::vector<std::vector<double>>& inputs, const std::vector<std::vector<double>>& targets,
               const TrainingConfig& config, Rng& rng);

  nlohmann::json to_json() const;
  static MlpRegressor from_json(const nlohmann::json& j);

  int input_dim() const { return in_; }
  int output_dim() const { return out_; }

 private:
  MlpRegressor() = default;
  int in_ = 0, out_ = 0, hidden_ = 0;
  std::vector<double> params_;  // w1, b1, w2, b2, w3, b3 packed

  friend class MlpGradients;
};

// Residual policy around a base trajectory:
//   mu_k(x) = saturate(u_k + F(x - x_k, k/N) - F(0, k/N)).
// The two network evaluations share one code path, so on the trajectory the
// residual is exactly zero and mu_k(x_k) reproduces u_k bit for bit;
// saturation cannot disturb this because u_k is feasible.
VecPolicy residual_policy(const VecProblem& problem, const VecTrajectory& base, MlpRegressor network);

// Trains the network on deviation targets (u-bar - u_k) with inputs
// (x-bar - x_k, k/N) and wraps it as a residual policy. An empty dataset
// skips training and zero-initializes the network, which reproduces the
// tabular replay behavior everywhere.
VecPolicy fit_residual_policy(const VecProblem& problem, const VecTrajectory& base, const ReplayDataset& dataset,
                              const TrainingConfig& config, std::uint64_t seed);

// The full stochastic generator: sample a dataset around the trajectory, train
// the residual network, return the residual policy. Consistent by
// construction regardless of the training outcome.
Generator<VecState, VecControl> make_residual_generator(const VecProblem& problem, const SamplingParams& sampling,
                                                        const TrainingConfig& training);

}  // namespace olpi
