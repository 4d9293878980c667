#include "actalign/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actalign/error.hpp"
#include "actalign/reward.hpp"
#include "actalign/rng.hpp"

namespace actalign {

ToyPolicy::ToyPolicy(std::size_t prompts, std::size_t length, std::size_t vocab)
    : ToyPolicy(prompts, length, vocab, std::vector<double>(prompts * length * vocab, 0.0)) {}

ToyPolicy::ToyPolicy(std::size_t prompts, std::size_t length, std::size_t vocab, std::vector<double> logits)
    : prompts_(prompts), length_(length), vocab_(vocab), logits_(std::move(logits)) {
  if (prompts_ == 0 || length_ == 0 || vocab_ == 0) throw ConfigError("toy policy needs P, L, W >= 1");
  if (logits_.size() != prompts_ * length_ * vocab_) throw DataError("toy policy logits have the wrong size");
  if (!std::all_of(logits_.begin(), logits_.end(), [](double x) { return std::isfinite(x); })) {
    throw NumericError("toy policy has non-finite logits");
  }
}

std::vector<double> ToyPolicy::log_probs(std::size_t prompt, std::size_t position) const {
  const auto row = std::span<const double>(logits_).subspan(offset(prompt, position), vocab_);
  const double peak = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double z : row) sum += std::exp(z - peak);
  const double log_norm = peak + std::log(sum);
  std::vector<double> out(vocab_);
  for (std::size_t w = 0; w < vocab_; ++w) out[w] = row[w] - log_norm;
  return out;
}

std::vector<double> ToyPolicy::probs(std::size_t prompt, std::size_t position) const {
  auto lp = log_probs(prompt, position);
  for (double& x : lp) x = std::exp(x);
  return lp;
}

double ToyPolicy::log_prob(std::size_t prompt, std::size_t position, TokenId token) const {
  return log_probs(prompt, position)[token];
}

nlohmann::json ToyPolicy::to_json() const {
  return {{"P", prompts_}, {"L", length_}, {"W", vocab_}, {"logits", logits_}};
}

ToyPolicy ToyPolicy::from_json(const nlohmann::json& j) {
  try {
    return ToyPolicy(j.at("P").get<std::size_t>(), j.at("L").get<std::size_t>(), j.at("W").get<std::size_t>(),
                     j.at("logits").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed policy: ") + e.what());
  }
}

RolloutGroup sample_group(const ToyPolicy& policy, std::size_t prompt_id, std::size_t group_size,
                          std::uint64_t seed) {
  if (prompt_id >= policy.prompts()) throw DataError("prompt id out of range");
  std::vector<std::vector<double>> log_probs(policy.length());
  std::vector<std::vector<double>> cdf(policy.length());
  for (std::size_t pos = 0; pos < policy.length(); ++pos) {
    log_probs[pos] = policy.log_probs(prompt_id, pos);
    double acc = 0.0;
    for (double lp : log_probs[pos]) cdf[pos].push_back(acc += std::exp(lp));
  }

  Rng rng(seed);
  RolloutGroup group{prompt_id, {}};
  group.responses.resize(group_size);
  for (auto& response : group.responses) {
    for (std::size_t pos = 0; pos < policy.length(); ++pos) {
      const double u = rng.uniform() * cdf[pos].back();
      auto it = std::upper_bound(cdf[pos].begin(), cdf[pos].end(), u);
      auto token = static_cast<std::size_t>(it - cdf[pos].begin());
      // u can only reach the end through round-off; fall back to the last
      // token with positive mass.
      if (token >= policy.vocab()) {
        token = policy.vocab() - 1;
        while (token > 0 && cdf[pos][token] == cdf[pos][token - 1]) --token;
      }
      response.tokens.push_back(static_cast<TokenId>(token));
      response.old_log_probs.push_back(log_probs[pos][token]);
    }
  }
  return group;
}

RewardAdapter parse_reward_adapter(const std::string& name) {
  if (name == "sequence_only") return RewardAdapter::sequence_only;
  if (name == "templated_text") return RewardAdapter::templated_text;
  throw ConfigError("unknown reward adapter '" + name + "' (expected sequence_only|templated_text)");
}

std::string to_string(RewardAdapter adapter) {
  return adapter == RewardAdapter::sequence_only ? "sequence_only" : "templated_text";
}

nlohmann::json SyntheticTask::to_json() const {
  nlohmann::json targets_json = nlohmann::json::array();
  for (const auto& t : targets) targets_json.push_back(t.ids);
  return {{"W", vocab}, {"L", length}, {"adapter", to_string(adapter)}, {"targets", std::move(targets_json)}};
}

SyntheticTask SyntheticTask::from_json(const nlohmann::json& j) {
  SyntheticTask task;
  try {
    task.vocab = j.at("W").get<std::size_t>();
    task.length = j.at("L").get<std::size_t>();
    task.adapter = parse_reward_adapter(j.value("adapter", std::string("sequence_only")));
    for (const auto& t : j.at("targets")) task.targets.push_back({t.get<std::vector<TokenId>>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed task: ") + e.what());
  }
  if (task.vocab == 0 || task.length == 0 || task.targets.empty()) throw DataError("task needs W, L >= 1 and targets");
  for (const auto& t : task.targets) {
    if (t.empty() || t.size() > task.length) throw DataError("task target length must be in [1, L]");
    for (TokenId id : t.ids) {
      if (id >= task.vocab) throw DataError("task target token " + std::to_string(id) + " >= W");
    }
  }
  return task;
}

SyntheticTask make_synthetic_task(std::size_t prompts, std::size_t vocab, std::size_t length, std::uint64_t seed,
                                  RewardAdapter adapter) {
  if (prompts == 0 || vocab == 0 || length == 0) throw ConfigError("synthetic task needs P, W, L >= 1");
  SyntheticTask task;
  task.vocab = vocab;
  task.length = length;
  task.adapter = adapter;
  Rng rng(derive_seed(seed, 0x7a5c));
  for (std::size_t p = 0; p < prompts; ++p) {
    ActionTokenSeq target;
    for (std::size_t i = 0; i < length; ++i) target.ids.push_back(static_cast<TokenId>(rng.below(vocab)));
    task.targets.push_back(std::move(target));
  }
  return task;
}

std::string render_templated_response(std::span<const TokenId> tokens) {
  return "<think>fixed</think><answer>" +
         render_action_tokens(ActionTokenSeq{{tokens.begin(), tokens.end()}}) + "</answer>";
}

double response_reward(std::span<const TokenId> tokens, const SyntheticTask& task, std::size_t prompt_id) {
  const auto& target = task.targets.at(prompt_id);
  if (task.adapter == RewardAdapter::sequence_only) {
    return accuracy_reward(ActionTokenSeq{{tokens.begin(), tokens.end()}}, target);
  }
  return score(render_templated_response(tokens), target).r;
}

void reward_group(RolloutGroup& group, const SyntheticTask& task) {
  for (auto& r : group.responses) r.reward = response_reward(r.tokens, task, group.prompt_id);
}

double kl_to_ref(const ToyPolicy& policy, const ToyPolicy& ref, std::size_t prompt_id) {
  if (!policy.same_shape(ref)) throw DataError("kl_to_ref: policy shapes differ");
  if (prompt_id >= policy.prompts()) throw DataError("prompt id out of range");
  double total = 0.0;
  for (std::size_t pos = 0; pos < policy.length(); ++pos) {
    const auto lp = policy.log_probs(prompt_id, pos);
    const auto lr = ref.log_probs(prompt_id, pos);
    for (std::size_t w = 0; w < lp.size(); ++w) total += std::exp(lp[w]) * (lp[w] - lr[w]);
  }
  return total / static_cast<double>(policy.length());
}

std::vector<std::vector<double>> importance_ratios(const ToyPolicy& policy, const RolloutGroup& group) {
  std::vector<std::vector<double>> out;
  out.reserve(group.responses.size());
  for (const auto& r : group.responses) {
    if (r.old_log_probs.size() != r.tokens.size()) throw DataError("response lacks old log-probs");
    std::vector<double> ratios;
    for (std::size_t t = 0; t < r.tokens.size(); ++t) {
      ratios.push_back(std::exp(policy.log_prob(group.prompt_id, t, r.tokens[t]) - r.old_log_probs[t]));
    }
    out.push_back(std::move(ratios));
  }
  return out;
}

double evaluate_policy(const ToyPolicy& policy, const SyntheticTask& task, std::size_t samples_per_prompt,
                       std::uint64_t seed) {
  if (policy.prompts() != task.prompts() || policy.vocab() != task.vocab || policy.length() != task.length) {
    throw DataError("policy shape does not match task");
  }
  if (samples_per_prompt == 0) throw ConfigError("evaluation needs at least one sample per prompt");
  double total = 0.0;
  for (std::size_t p = 0; p < task.prompts(); ++p) {
    auto group = sample_group(policy, p, samples_per_prompt, derive_seed(seed, p, 0xe7a1));
    reward_group(group, task);
    for (const auto& r : group.responses) total += r.reward;
  }
  return total / static_cast<double>(task.prompts() * samples_per_prompt);
}

}  // namespace actalign
