#include "actalign/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "actalign/error.hpp"
#include "actalign/rng.hpp"

namespace actalign {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd|adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("GRPO needs G >= 2");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip epsilon must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw ConfigError("KL weight beta must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (inner_epochs == 0) throw ConfigError("inner epochs must be >= 1");
  if (!(eps_std > 0.0)) throw ConfigError("eps_std must be > 0");
  if (optimizer == OptimizerKind::adam &&
      !(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("invalid adam hyperparameters");
  }
}

nlohmann::json GrpoConfig::to_json() const {
  return {
      {"G", group_size},
      {"clip_eps", clip_eps},
      {"kl_beta", kl_beta},
      {"learning_rate", learning_rate},
      {"rollout_batch", rollout_batch},
      {"update_batch", update_batch},
      {"inner_epochs", inner_epochs},
      {"eps_std", eps_std},
      {"steps", steps},
      {"seed", seed},
      {"optimizer", to_string(optimizer)},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"adam_eps", adam_eps},
  };
}

GrpoConfig GrpoConfig::from_json(const nlohmann::json& j) {
  GrpoConfig c;
  try {
    c.group_size = j.at("G").get<std::size_t>();
    c.clip_eps = j.at("clip_eps").get<double>();
    c.kl_beta = j.at("kl_beta").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.rollout_batch = j.at("rollout_batch").get<std::size_t>();
    c.update_batch = j.at("update_batch").get<std::size_t>();
    c.inner_epochs = j.at("inner_epochs").get<std::size_t>();
    c.eps_std = j.at("eps_std").get<double>();
    c.steps = j.at("steps").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed GRPO config: ") + e.what());
  }
  return c;
}

std::vector<double> compute_advantages(std::span<const double> rewards, double eps_std) {
  if (rewards.size() < 2) throw ConfigError("advantages need a group of at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);

  std::vector<double> adv(rewards.size(), 0.0);
  if (std_dev < eps_std) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / std_dev;
  return adv;
}

void assign_advantages(RolloutGroup& group, double eps_std) {
  std::vector<double> rewards;
  rewards.reserve(group.responses.size());
  for (const auto& r : group.responses) rewards.push_back(r.reward);
  const auto adv = compute_advantages(rewards, eps_std);
  for (std::size_t i = 0; i < adv.size(); ++i) group.responses[i].advantage = adv[i];
}

ObjectiveResult grpo_objective(const ToyPolicy& policy, const ToyPolicy& ref, std::span<const RolloutGroup> groups,
                               const GrpoConfig& config) {
  if (!policy.same_shape(ref)) throw DataError("grpo_objective: policy and reference shapes differ");
  ObjectiveResult out;
  out.gradient.assign(policy.logits().size(), 0.0);
  if (groups.empty()) return out;

  std::size_t responses = 0;
  for (const auto& g : groups) responses += g.responses.size();
  const double lo = 1.0 - config.clip_eps;
  const double hi = 1.0 + config.clip_eps;

  for (const auto& group : groups) {
    const std::size_t p = group.prompt_id;
    if (p >= policy.prompts()) throw DataError("rollout group prompt id out of range");
    for (const auto& response : group.responses) {
      const std::size_t len = response.tokens.size();
      if (len == 0 || len > policy.length() || response.old_log_probs.size() != len) {
        throw DataError("rollout response does not fit the policy");
      }
      const double weight = 1.0 / (static_cast<double>(responses) * static_cast<double>(len));
      const double a = response.advantage;
      for (std::size_t t = 0; t < len; ++t) {
        const TokenId w = response.tokens[t];
        const auto lp = policy.log_probs(p, t);
        const double rho = std::exp(lp[w] - response.old_log_probs[t]);
        const double unclipped = rho * a;
        const double clipped = std::clamp(rho, lo, hi) * a;
        out.surrogate += weight * std::min(unclipped, clipped);
        if (unclipped <= clipped) {
          // d rho / d z_v = rho * (1[v == w] - pi_v)
          const std::size_t base = policy.offset(p, t);
          for (std::size_t v = 0; v < policy.vocab(); ++v) {
            const double indicator = v == w ? 1.0 : 0.0;
            out.gradient[base + v] += weight * a * rho * (indicator - std::exp(lp[v]));
          }
        }
      }
    }
  }

  const double group_weight = 1.0 / static_cast<double>(groups.size());
  const double positions = static_cast<double>(policy.length());
  for (const auto& group : groups) {
    const std::size_t p = group.prompt_id;
    double kl = 0.0;
    for (std::size_t t = 0; t < policy.length(); ++t) {
      const auto lp = policy.log_probs(p, t);
      const auto lr = ref.log_probs(p, t);
      double kl_pos = 0.0;
      for (std::size_t v = 0; v < lp.size(); ++v) kl_pos += std::exp(lp[v]) * (lp[v] - lr[v]);
      kl += kl_pos;
      // d KL_pos / d z_v = pi_v * (log pi_v - log ref_v - KL_pos)
      const std::size_t base = policy.offset(p, t);
      for (std::size_t v = 0; v < lp.size(); ++v) {
        const double d_kl = std::exp(lp[v]) * (lp[v] - lr[v] - kl_pos);
        out.gradient[base + v] -= config.kl_beta * group_weight * d_kl / positions;
      }
    }
    out.kl += group_weight * kl / positions;
  }
  out.objective = out.surrogate - config.kl_beta * out.kl;
  return out;
}

nlohmann::json StepStats::to_json() const {
  return {{"step", step}, {"mean_reward", mean_reward}, {"mean_abs_adv", mean_abs_adv}, {"kl", kl},
          {"mean_len", mean_len}};
}

namespace {

std::vector<RolloutGroup> sample_rollouts(const ToyPolicy& policy, std::size_t step, std::size_t batch,
                                          const GrpoConfig& config) {
  std::vector<RolloutGroup> groups(batch);
  auto work = [&](std::size_t g) {
    const std::size_t prompt = (step * batch + g) % policy.prompts();
    groups[g] = sample_group(policy, prompt, config.group_size, derive_seed(config.seed, step, g));
  };
  const std::size_t threads = std::clamp<std::size_t>(config.threads, 1, batch);
  if (threads == 1) {
    for (std::size_t g = 0; g < batch; ++g) work(g);
    return groups;
  }
  // Each group has its own RNG stream and output slot, so the split across
  // workers cannot change the result.
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t g = w; g < batch; g += threads) work(g);
    });
  }
  workers.clear();
  return groups;
}

class Optimizer {
 public:
  Optimizer(const GrpoConfig& config, std::size_t size)
      : config_(config), m_(config.optimizer == OptimizerKind::adam ? size : 0, 0.0), v_(m_.size(), 0.0) {}

  // Ascent step: parameters move along the gradient.
  void apply(std::span<double> params, std::span<const double> grad) {
    if (config_.optimizer == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] += config_.learning_rate * grad[i];
      return;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.adam_beta1 * m_[i] + (1.0 - config_.adam_beta1) * grad[i];
      v_[i] = config_.adam_beta2 * v_[i] + (1.0 - config_.adam_beta2) * grad[i] * grad[i];
      params[i] += config_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.adam_eps);
    }
  }

 private:
  const GrpoConfig& config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace

TrainResult train(const SyntheticTask& task, const GrpoConfig& config, const StepCallback& on_step) {
  return train(task, config, ToyPolicy(task.prompts(), task.length, task.vocab), on_step);
}

TrainResult train(const SyntheticTask& task, const GrpoConfig& config, ToyPolicy initial,
                  const StepCallback& on_step) {
  config.validate();
  if (initial.prompts() != task.prompts() || initial.length() != task.length || initial.vocab() != task.vocab) {
    throw ConfigError("initial policy shape does not match the task");
  }

  TrainResult result{initial, std::move(initial), {}};
  ToyPolicy& policy = result.policy;
  const ToyPolicy& ref = result.reference;
  const std::size_t batch = config.rollout_batch == 0 ? task.prompts() : config.rollout_batch;
  const std::size_t minibatch = config.update_batch == 0 ? batch : std::min(config.update_batch, batch);
  Optimizer optimizer(config, policy.logits().size());

  for (std::size_t step = 0; step < config.steps; ++step) {
    auto groups = sample_rollouts(policy, step, batch, config);

    StepStats stats;
    stats.step = step;
    double total_len = 0.0;
    std::size_t n = 0;
    for (auto& g : groups) {
      reward_group(g, task);
      assign_advantages(g, config.eps_std);
      for (const auto& r : g.responses) {
        stats.mean_reward += r.reward;
        stats.mean_abs_adv += std::abs(r.advantage);
        total_len += static_cast<double>(r.tokens.size());
        ++n;
      }
      stats.kl += kl_to_ref(policy, ref, g.prompt_id);
    }
    stats.mean_reward /= static_cast<double>(n);
    stats.mean_abs_adv /= static_cast<double>(n);
    stats.mean_len = total_len / static_cast<double>(n);
    stats.kl /= static_cast<double>(groups.size());

    for (std::size_t epoch = 0; epoch < config.inner_epochs; ++epoch) {
      for (std::size_t start = 0; start < groups.size(); start += minibatch) {
        const auto count = std::min(minibatch, groups.size() - start);
        const auto obj = grpo_objective(policy, ref, std::span<const RolloutGroup>(groups).subspan(start, count), config);
        for (std::size_t i = 0; i < obj.gradient.size(); ++i) {
          if (!std::isfinite(obj.gradient[i])) {
            std::ostringstream msg;
            msg << "non-finite gradient at step " << step << ", epoch " << epoch << ", groups [" << start << ", "
                << start + count << "), logit index " << i << " (objective " << obj.objective << ", kl " << obj.kl
                << ")";
            throw NumericError(msg.str());
          }
        }
        optimizer.apply(policy.logits(), obj.gradient);
        const auto logits = policy.logits();
        const auto bad = std::find_if(logits.begin(), logits.end(), [](double x) { return !std::isfinite(x); });
        if (bad != logits.end()) {
          throw NumericError("non-finite policy logit at step " + std::to_string(step) + ", index " +
                             std::to_string(bad - logits.begin()));
        }
      }
    }

    if (on_step) on_step(stats);
    result.log.steps.push_back(stats);
  }
  return result;
}

nlohmann::json make_checkpoint(const TrainResult& result, const SyntheticTask& task, const GrpoConfig& config) {
  return {
      {"version", 1},
      {"config", config.to_json()},
      {"task", task.to_json()},
      {"policy", result.policy.to_json()},
      {"rng", {{"engine", "mt19937_64/splitmix64"}, {"seed", config.seed}, {"next_step", result.log.steps.size()}}},
  };
}

Checkpoint load_checkpoint(const nlohmann::json& j) {
  Checkpoint c;
  try {
    if (j.at("version").get<int>() != 1) throw DataError("unsupported checkpoint version");
    c.policy = ToyPolicy::from_json(j.at("policy"));
    c.task = SyntheticTask::from_json(j.at("task"));
    c.config = GrpoConfig::from_json(j.at("config"));
    c.next_step = j.at("rng").at("next_step").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  if (c.policy.prompts() != c.task.prompts() || c.policy.length() != c.task.length ||
      c.policy.vocab() != c.task.vocab) {
    throw DataError("checkpoint policy does not match its task");
  }
  return c;
}

}  // namespace actalign
