#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actalign/policy.hpp"

namespace actalign {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct GrpoConfig {
  std::size_t group_size = 5;      // G
  double clip_eps = 0.2;           // epsilon
  double kl_beta = 0.01;           // beta
  double learning_rate = 0.5;      // eta
  std::size_t rollout_batch = 64;  // groups sampled per step; 0 = one per prompt
  std::size_t update_batch = 1;    // groups per gradient update; 0 = whole rollout batch
  std::size_t inner_epochs = 1;    // mu
  double eps_std = 1e-8;
  std::size_t steps = 500;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Sampling workers. Results do not depend on it.
  std::size_t threads = 1;

  // Throws ConfigError on out-of-range values.
  void validate() const;

  // Every field except `threads`.
  nlohmann::json to_json() const;
  static GrpoConfig from_json(const nlohmann::json& j);
};

// A_i = (r_i - mean) / std with population std; all zeros when std < eps_std.
std::vector<double> compute_advantages(std::span<const double> rewards, double eps_std = 1e-8);
void assign_advantages(RolloutGroup& group, double eps_std);

struct ObjectiveResult {
  double objective = 0.0;   // surrogate - beta * kl
  double surrogate = 0.0;
  double kl = 0.0;          // mean over groups of kl_to_ref(group prompt)
  std::vector<double> gradient;  // d objective / d logits, policy layout
};

// Clipped surrogate with exact KL penalty:
//   J = mean_i mean_t min(rho_it A_i, clip(rho_it, 1-eps, 1+eps) A_i) - beta * KL
// where i ranges over every response of every group. The gradient follows the
// active branch of the min; a clipped term contributes nothing.
ObjectiveResult grpo_objective(const ToyPolicy& policy, const ToyPolicy& ref, std::span<const RolloutGroup> groups,
                               const GrpoConfig& config);

struct StepStats {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_abs_adv = 0.0;
  double kl = 0.0;
  double mean_len = 0.0;

  nlohmann::json to_json() const;
};

struct TrainingLog {
  std::vector<StepStats> steps;
};

struct TrainResult {
  ToyPolicy policy;
  ToyPolicy reference;
  TrainingLog log;
};

// Optional per-step observer (e.g. progress output); does not affect results.
using StepCallback = std::function<void(const StepStats&)>;

// Per step: snapshot the old policy, sample `rollout_batch` groups (prompts
// round-robin), score them, normalize advantages, then run `inner_epochs`
// passes of gradient ascent over minibatches of `update_batch` groups. Each
// step is logged from the rollouts taken before its update. The reference is
// the initial policy. Throws NumericError if a gradient goes non-finite.
TrainResult train(const SyntheticTask& task, const GrpoConfig& config, const StepCallback& on_step = {});
TrainResult train(const SyntheticTask& task, const GrpoConfig& config, ToyPolicy initial,
                  const StepCallback& on_step = {});

// Checkpoint: policy logits + config + task + RNG state (seed and the next
// step whose streams have not been consumed).
nlohmann::json make_checkpoint(const TrainResult& result, const SyntheticTask& task, const GrpoConfig& config);

struct Checkpoint {
  ToyPolicy policy;
  SyntheticTask task;
  GrpoConfig config;
  std::uint64_t next_step = 0;
};

Checkpoint load_checkpoint(const nlohmann::json& j);

}  // namespace actalign
