#include "olpi/residual.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "olpi/serialization.hpp"

namespace olpi {

namespace {

double sigma_at(const std::vector<double>& sigma, std::size_t i) {
  return sigma.size() == 1 ? sigma[0] : sigma[i];
}

}  // namespace

ReplayDataset collect_replay_dataset(const VecProblem& problem, const VecTrajectory& traj,
                                     const SamplingParams& params, std::uint64_t seed) {
  if (problem.control_lower.empty() || problem.control_upper.empty()) {
    throw ConfigError("replay dataset collection requires control box bounds");
  }
  const int N = problem.horizon;
  Rng rng(seed);
  Rng state_rng = rng.stream("states");
  Rng control_rng = rng.stream("controls");

  // Intermediate replay policy mu-bar_k(x) = u_k; shared cost-to-go cache.
  const VecPolicy replay = tabular_generator(traj);
  CostToGoCache<VecState, VecControl> cache(N);

  ReplayDataset dataset;
  for (int k = 1; k < N; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const int q = params.samples_at(k);
    for (int j = 0; j < q; ++j) {
      VecState x = traj.states[ks];
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += sigma_at(params.state_sigma, i) * state_rng.next_gaussian();
      }

      const VecControl& base_u = traj.controls[ks];
      double best_value = 0.0;
      VecControl best = base_u;
      bool have_best = false;
      for (int s = 0; s <= params.control_candidates; ++s) {
        VecControl u = base_u;
        if (s > 0) {
          for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] += sigma_at(params.control_sigma, i) * control_rng.next_gaussian();
            u[i] = std::min(problem.control_upper[i], std::max(problem.control_lower[i], u[i]));
          }
        }
        const double value = problem.stage_cost(k, x, u) + cache.evaluate(problem, replay, problem.dynamics(k, x, u), k + 1);
        if (!have_best || value < best_value) {
          have_best = true;
          best_value = value;
          best = std::move(u);
        }
      }
      dataset.samples.push_back(ReplaySample{k, std::move(x), std::move(best)});
    }
  }
  return dataset;
}

std::string replay_dataset_csv(const ReplayDataset& dataset) {
  std::string out = "k";
  if (!dataset.samples.empty()) {
    for (std::size_t i = 0; i < dataset.samples.front().state.size(); ++i) {
      out += ",x" + std::to_string(i);
    }
    for (std::size_t i = 0; i < dataset.samples.front().control.size(); ++i) {
      out += ",u" + std::to_string(i);
    }
  }
  out += '\n';
  for (const auto& s : dataset.samples) {
    out += std::to_string(s.stage);
    for (double v : s.state) {
      out += ',';
      out += format_double(v);
    }
    for (double v : s.control) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

ReplayDataset replay_dataset_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw Error("replay dataset CSV: missing header");
  int state_dim = 0;
  int control_dim = 0;
  {
    std::istringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) {
      if (field.rfind("x", 0) == 0) ++state_dim;
      if (field.rfind("u", 0) == 0) ++control_dim;
    }
  }
  ReplayDataset dataset;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    ReplaySample s;
    if (!std::getline(row, field, ',')) throw Error("replay dataset CSV: bad row");
    s.stage = std::stoi(field);
    for (int i = 0; i < state_dim; ++i) {
      if (!std::getline(row, field, ',')) throw Error("replay dataset CSV: truncated state");
      s.state.push_back(std::strtod(field.c_str(), nullptr));
    }
    for (int i = 0; i < control_dim; ++i) {
      if (!std::getline(row, field, ',')) throw Error("replay dataset CSV: truncated control");
      s.control.push_back(std::strtod(field.c_str(), nullptr));
    }
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

MlpRegressor::MlpRegressor(int input_dim, int output_dim, int hidden, std::uint64_t init_seed, bool zero_init)
    : in_(input_dim), out_(output_dim), hidden_(hidden) {
  const std::size_t total = static_cast<std::size_t>(hidden) * static_cast<std::size_t>(input_dim) +
                            static_cast<std::size_t>(hidden) +
                            static_cast<std::size_t>(hidden) * static_cast<std::size_t>(hidden) +
                            static_cast<std::size_t>(hidden) +
                            static_cast<std::size_t>(output_dim) * static_cast<std::size_t>(hidden) +
                            static_cast<std::size_t>(output_dim);
  params_.assign(total, 0.0);
  if (!zero_init) {
    Rng rng(init_seed);
    // Xavier-style scales per layer; biases stay zero.
    const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim + hidden));
    const double s2 = std::sqrt(2.0 / static_cast<double>(hidden + hidden));
    const double s3 = std::sqrt(2.0 / static_cast<double>(hidden + output_dim));
    std::size_t idx = 0;
    for (int i = 0; i < hidden * input_dim; ++i) params_[idx++] = s1 * rng.next_gaussian();
    idx += static_cast<std::size_t>(hidden);
    for (int i = 0; i < hidden * hidden; ++i) params_[idx++] = s2 * rng.next_gaussian();
    idx += static_cast<std::size_t>(hidden);
    for (int i = 0; i < output_dim * hidden; ++i) params_[idx++] = s3 * rng.next_gaussian();
  }
}

namespace {

struct Layout {
  std::size_t w1, b1, w2, b2, w3, b3;
};

Layout layout_of(int in, int out, int hidden) {
  Layout l{};
  l.w1 = 0;
  l.b1 = l.w1 + static_cast<std::size_t>(hidden) * static_cast<std::size_t>(in);
  l.w2 = l.b1 + static_cast<std::size_t>(hidden);
  l.b2 = l.w2 + static_cast<std::size_t>(hidden) * static_cast<std::size_t>(hidden);
  l.w3 = l.b2 + static_cast<std::size_t>(hidden);
  l.b3 = l.w3 + static_cast<std::size_t>(out) * static_cast<std::size_t>(hidden);
  return l;
}

}  // namespace

std::vector<double> MlpRegressor::forward(std::span<const double> input) const {
  const Layout l = layout_of(in_, out_, hidden_);
  std::vector<double> h1(static_cast<std::size_t>(hidden_));
  for (int i = 0; i < hidden_; ++i) {
    double acc = params_[l.b1 + static_cast<std::size_t>(i)];
    const std::size_t row = l.w1 + static_cast<std::size_t>(i) * static_cast<std::size_t>(in_);
    for (int j = 0; j < in_; ++j) acc += params_[row + static_cast<std::size_t>(j)] * input[static_cast<std::size_t>(j)];
    h1[static_cast<std::size_t>(i)] = std::tanh(acc);
  }
  std::vector<double> h2(static_cast<std::size_t>(hidden_));
  for (int i = 0; i < hidden_; ++i) {
    double acc = params_[l.b2 + static_cast<std::size_t>(i)];
    const std::size_t row = l.w2 + static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_);
    for (int j = 0; j < hidden_; ++j) acc += params_[row + static_cast<std::size_t>(j)] * h1[static_cast<std::size_t>(j)];
    h2[static_cast<std::size_t>(i)] = std::tanh(acc);
  }
  std::vector<double> out(static_cast<std::size_t>(out_));
  for (int i = 0; i < out_; ++i) {
    double acc = params_[l.b3 + static_cast<std::size_t>(i)];
    const std::size_t row = l.w3 + static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_);
    for (int j = 0; j < hidden_; ++j) acc += params_[row + static_cast<std::size_t>(j)] * h2[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

double MlpRegressor::train(const std::vector<std::vector<double>>& inputs,
                           const std::vector<std::vector<double>>& targets, const TrainingConfig& config,
                           Rng& rng) {
  if (inputs.empty()) return 0.0;
  if (inputs.size() != targets.size()) throw Error("mlp train: inputs/targets size mismatch");
  const Layout l = layout_of(in_, out_, hidden_);
  const std::size_t P = params_.size();
  std::vector<double> grad(P, 0.0);
  std::vector<double> m1(P, 0.0), m2(P, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  // forward scratch
  std::vector<double> h1(static_cast<std::size_t>(hidden_)), h2(static_cast<std::size_t>(hidden_)),
      out(static_cast<std::size_t>(out_));
  std::vector<double> d1(static_cast<std::size_t>(hidden_)), d2(static_cast<std::size_t>(hidden_)),
      dout(static_cast<std::size_t>(out_));

  double epoch_loss = 0.0;
  long long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // deterministic shuffle from the run's randomness source
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next_int(static_cast<int>(i)))]);
    }
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t pos = start; pos < stop; ++pos) {
        const auto& x = inputs[order[pos]];
        const auto& y = targets[order[pos]];
        // forward
        for (int i = 0; i < hidden_; ++i) {
          double acc = params_[l.b1 + static_cast<std::size_t>(i)];
          const std::size_t row = l.w1 + static_cast<std::size_t>(i) * static_cast<std::size_t>(in_);
          for (int j = 0; j < in_; ++j) acc += params_[row + static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
          h1[static_cast<std::size_t>(i)] = std::tanh(acc);
        }
        for (int i = 0; i < hidden_; ++i) {
          double acc = params_[l.b2 + static_cast<std::size_t>(i)];
          const std::size_t row = l.w2 + static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_);
          for (int j = 0; j < hidden_; ++j) acc += params_[row + static_cast<std::size_t>(j)] * h1[static_cast<std::size_t>(j)];
          h2[static_cast<std::size_t>(i)] = std::tanh(acc);
        }
        for (int i = 0; i < out_; ++i) {
          double acc = params_[l.b3 + static_cast<std::size_t>(i)];
          const std::size_t row = l.w3 + static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_);
          for (int j = 0; j < hidden_; ++j) acc += params_[row + static_cast<std::size_t>(j)] * h2[static_cast<std::size_t>(j)];
          out[static_cast<std::size_t>(i)] = acc;
        }
        // squared-error loss and backward
        for (int i = 0; i < out_; ++i) {
          const double diff = out[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)];
          batch_loss += diff * diff;
          dout[static_cast<std::size_t>(i)] = 2.0 * diff;
        }
        std::fill(d2.begin(), d2.end(), 0.0);
        for (int i = 0; i < out_; ++i) {
          const std::size_t row = l.w3 + static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_);
          grad[l.b3 + static_cast<std::size_t>(i)] += dout[static_cast<std::size_t>(i)];
          for (int j = 0; j < hidden_; ++j) {
            grad[row + static_cast<std::size_t>(j)] += dout[static_cast<std::size_t>(i)] * h2[static_cast<std::size_t>(j)];
            d2[static_cast<std::size_t>(j)] += dout[static_cast<std::size_t>(i)] * params_[row + static_cast<std::size_t>(j)];
          }
        }
        for (int i = 0; i < hidden_; ++i) {
          d2[static_cast<std::size_t>(i)] *= 1.0 - h2[static_cast<std::size_t>(i)] * h2[static_cast<std::size_t>(i)];
        }
        std::fill(d1.begin(), d1.end(), 0.0);
        for (int i = 0; i < hidden_; ++i) {
          const std::size_t row = l.w2 + static_cast<std::size_t>(i) * static_cast<std::size_t>(hidden_);
          grad[l.b2 + static_cast<std::size_t>(i)] += d2[static_cast<std::size_t>(i)];
          for (int j = 0; j < hidden_; ++j) {
            grad[row + static_cast<std::size_t>(j)] += d2[static_cast<std::size_t>(i)] * h1[static_cast<std::size_t>(j)];
            d1[static_cast<std::size_t>(j)] += d2[static_cast<std::size_t>(i)] * params_[row + static_cast<std::size_t>(j)];
          }
        }
        for (int i = 0; i < hidden_; ++i) {
          d1[static_cast<std::size_t>(i)] *= 1.0 - h1[static_cast<std::size_t>(i)] * h1[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < hidden_; ++i) {
          const std::size_t row = l.w1 + static_cast<std::size_t>(i) * static_cast<std::size_t>(in_);
          grad[l.b1 + static_cast<std::size_t>(i)] += d1[static_cast<std::size_t>(i)];
          for (int j = 0; j < in_; ++j) {
            grad[row + static_cast<std::size_t>(j)] += d1[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      epoch_loss += batch_loss;
      if (!std::isfinite(batch_loss)) {
        throw TrainingDivergenceError("regressor loss is non-finite");
      }
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < P; ++i) {
        const double g = grad[i] * scale;
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
        params_[i] -= config.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + eps);
      }
    }
  }
  const double final_loss = epoch_loss / static_cast<double>(inputs.size());
  if (!std::isfinite(final_loss)) throw TrainingDivergenceError("regressor loss is non-finite");
  return final_loss;
}

nlohmann::json MlpRegressor::to_json() const {
  return nlohmann::json{{"version", 1},
                        {"input_dim", in_},
                        {"output_dim", out_},
                        {"hidden", hidden_},
                        {"params", params_}};
}

MlpRegressor MlpRegressor::from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != 1) throw ConfigError("regressor parameters: unsupported version");
  MlpRegressor net(j.at("input_dim").get<int>(), j.at("output_dim").get<int>(), j.at("hidden").get<int>(), 0,
                   true);
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.params_.size()) throw ConfigError("regressor parameters: size mismatch");
  net.params_ = params;
  return net;
}

VecPolicy residual_policy(const VecProblem& problem, const VecTrajectory& base, MlpRegressor network) {
  const int N = problem.horizon;
  if (base.horizon() != N) throw ShapeError("residual policy: trajectory horizon mismatch");
  auto net = std::make_shared<const MlpRegressor>(std::move(network));
  auto traj = std::make_shared<const VecTrajectory>(base);
  const std::vector<double> lo = problem.control_lower;
  const std::vector<double> hi = problem.control_upper;

  // F(0, k/N) per stage, evaluated once through the same forward code path
  // used at query time.
  auto zero_out = std::make_shared<std::vector<std::vector<double>>>();
  zero_out->reserve(static_cast<std::size_t>(N));
  const std::size_t sdim = base.states[0].size();
  for (int k = 0; k < N; ++k) {
    std::vector<double> input(sdim + 1, 0.0);
    input[sdim] = static_cast<double>(k) / static_cast<double>(N);
    zero_out->push_back(net->forward(input));
  }

  VecPolicy policy;
  for (int k = 0; k < N; ++k) {
    policy.stage_maps.push_back([net, traj, zero_out, lo, hi, k, N](const VecState& x) -> VecControl {
      const auto ks = static_cast<std::size_t>(k);
      const VecState& xk = traj->states[ks];
      std::vector<double> input(x.size() + 1);
      for (std::size_t i = 0; i < x.size(); ++i) input[i] = x[i] - xk[i];
      input[x.size()] = static_cast<double>(k) / static_cast<double>(N);
      const std::vector<double> f = net->forward(input);
      const std::vector<double>& f0 = (*zero_out)[ks];
      VecControl u = traj->controls[ks];
      for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = u[i] + (f[i] - f0[i]);
        if (!lo.empty()) u[i] = std::min(hi[i], std::max(lo[i], u[i]));
      }
      return u;
    });
  }
  return policy;
}

VecPolicy fit_residual_policy(const VecProblem& problem, const VecTrajectory& base, const ReplayDataset& dataset,
                              const TrainingConfig& config, std::uint64_t seed) {
  const int N = problem.horizon;
  const std::size_t sdim = base.states[0].size();
  const std::size_t cdim = base.controls[0].size();
  const bool empty = dataset.samples.empty();

  MlpRegressor net(static_cast<int>(sdim) + 1, static_cast<int>(cdim), config.hidden, Rng(seed).next_u64(),
                   config.zero_init || empty);
  if (!empty) {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    inputs.reserve(dataset.samples.size());
    targets.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) {
      const auto ks = static_cast<std::size_t>(s.stage);
      std::vector<double> input(sdim + 1);
      for (std::size_t i = 0; i < sdim; ++i) input[i] = s.state[i] - base.states[ks][i];
      input[sdim] = static_cast<double>(s.stage) / static_cast<double>(N);
      std::vector<double> target(cdim);
      for (std::size_t i = 0; i < cdim; ++i) target[i] = s.control[i] - base.controls[ks][i];
      inputs.push_back(std::move(input));
      targets.push_back(std::move(target));
    }
    Rng train_rng = Rng(seed).stream("training");
    net.train(inputs, targets, config, train_rng);
  }
  return residual_policy(problem, base, std::move(net));
}

Generator<VecState, VecControl> make_residual_generator(const VecProblem& problem, const SamplingParams& sampling,
                                                        const TrainingConfig& training) {
  Generator<VecState, VecControl> gen;
  gen.stochastic = true;
  gen.generate = [problem, sampling, training](const VecTrajectory& traj, Rng& rng) {
    const std::uint64_t data_seed = rng.next_u64();
    const std::uint64_t fit_seed = rng.next_u64();
    const ReplayDataset dataset = collect_replay_dataset(problem, traj, sampling, data_seed);
    return fit_residual_policy(problem, traj, dataset, training, fit_seed);
  };
  return gen;
}

}  // namespace olpi
