#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actalign/action_tokens.hpp"

namespace actalign {

// Tabular autoregressive toy policy: an independent categorical over W tokens
// for every (prompt, position). Responses have fixed length L.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  // All-zero logits, i.e. uniform.
  ToyPolicy(std::size_t prompts, std::size_t length, std::size_t vocab);
  ToyPolicy(std::size_t prompts, std::size_t length, std::size_t vocab, std::vector<double> logits);

  std::size_t prompts() const noexcept { return prompts_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t vocab() const noexcept { return vocab_; }

  std::size_t offset(std::size_t prompt, std::size_t position) const noexcept {
    return (prompt * length_ + position) * vocab_;
  }
  double& logit(std::size_t prompt, std::size_t position, std::size_t token) {
    return logits_[offset(prompt, position) + token];
  }
  double logit(std::size_t prompt, std::size_t position, std::size_t token) const {
    return logits_[offset(prompt, position) + token];
  }
  std::span<double> logits() noexcept { return logits_; }
  std::span<const double> logits() const noexcept { return logits_; }

  // Numerically stable log-softmax of one (prompt, position) row.
  std::vector<double> log_probs(std::size_t prompt, std::size_t position) const;
  std::vector<double> probs(std::size_t prompt, std::size_t position) const;
  double log_prob(std::size_t prompt, std::size_t position, TokenId token) const;

  bool same_shape(const ToyPolicy& other) const noexcept {
    return prompts_ == other.prompts_ && length_ == other.length_ && vocab_ == other.vocab_;
  }

  bool operator==(const ToyPolicy&) const = default;

  nlohmann::json to_json() const;
  static ToyPolicy from_json(const nlohmann::json& j);

 private:
  std::size_t prompts_ = 0;
  std::size_t length_ = 0;
  std::size_t vocab_ = 0;
  std::vector<double> logits_;
};

struct Response {
  std::vector<TokenId> tokens;
  std::vector<double> old_log_probs;  // per token, from the sampling-time policy
  double reward = 0.0;
  double advantage = 0.0;
};

struct RolloutGroup {
  std::size_t prompt_id = 0;
  std::vector<Response> responses;
};

// G responses drawn token by token; deterministic in `seed`.
RolloutGroup sample_group(const ToyPolicy& policy, std::size_t prompt_id, std::size_t group_size, std::uint64_t seed);

enum class RewardAdapter { sequence_only, templated_text };

RewardAdapter parse_reward_adapter(const std::string& name);
std::string to_string(RewardAdapter adapter);

// Per-prompt target token sequences over a W-token vocabulary.
struct SyntheticTask {
  std::size_t vocab = 16;
  std::size_t length = 6;
  std::vector<ActionTokenSeq> targets;
  RewardAdapter adapter = RewardAdapter::sequence_only;

  std::size_t prompts() const noexcept { return targets.size(); }

  nlohmann::json to_json() const;
  static SyntheticTask from_json(const nlohmann::json& j);
};

// Uniformly random length-`length` targets; deterministic in `seed`.
SyntheticTask make_synthetic_task(std::size_t prompts, std::size_t vocab, std::size_t length, std::uint64_t seed,
                                  RewardAdapter adapter = RewardAdapter::sequence_only);

// Text a templated_text rollout is scored as.
std::string render_templated_response(std::span<const TokenId> tokens);

double response_reward(std::span<const TokenId> tokens, const SyntheticTask& task, std::size_t prompt_id);
void reward_group(RolloutGroup& group, const SyntheticTask& task);

// Exact KL(policy || ref) for one prompt, averaged over positions.
double kl_to_ref(const ToyPolicy& policy, const ToyPolicy& ref, std::size_t prompt_id);

// Per-response, per-token exp(new log-prob - old log-prob).
std::vector<std::vector<double>> importance_ratios(const ToyPolicy& policy, const RolloutGroup& group);

// Mean reward over `samples_per_prompt` fresh rollouts of every prompt.
double evaluate_policy(const ToyPolicy& policy, const SyntheticTask& task, std::size_t samples_per_prompt,
                       std::uint64_t seed);

}  // namespace actalign
