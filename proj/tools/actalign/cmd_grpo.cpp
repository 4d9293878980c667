#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "actalign/error.hpp"
#include "actalign/grpo.hpp"
#include "cli.hpp"

namespace actalign::cli {

namespace {

struct GrpoParams {
  std::string task_file;
  std::size_t prompts = 8;
  std::size_t vocab = 16;
  std::size_t length = 6;
  std::uint64_t task_seed = 0;
  std::string adapter = "sequence_only";
  std::string optimizer = "sgd";
  GrpoConfig config;

  std::string checkpoint;
  std::size_t samples = 64;
};

nlohmann::json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + what + " " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(what + " is not valid JSON: " + e.what());
  }
}

SyntheticTask resolve_task(const GrpoParams& p) {
  if (!p.task_file.empty()) return SyntheticTask::from_json(read_json_file(p.task_file, "task file"));
  if (p.prompts == 0 || p.vocab < 2 || p.length == 0) throw ConfigError("task needs P >= 1, W >= 2, L >= 1");
  return make_synthetic_task(p.prompts, p.vocab, p.length, p.task_seed, parse_reward_adapter(p.adapter));
}

void run_train(const GrpoParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  GrpoConfig config = p.config;
  config.seed = ctx.seed;
  config.threads = ctx.threads;
  config.optimizer = parse_optimizer(p.optimizer);
  config.validate();
  const auto task = resolve_task(p);

  const auto result = train(task, config, [&](const StepStats& s) {
    if (ctx.verbose) std::cout << s.to_json().dump() << '\n';
  });

  std::ostringstream log;
  std::ostringstream csv;
  csv << "step,mean_reward\n";
  for (const auto& s : result.log.steps) {
    log << s.to_json().dump() << '\n';
    csv << s.step << ',' << format_number(s.mean_reward) << '\n';
  }
  auto checkpoint = make_checkpoint(result, task, config);
  checkpoint["provenance"] = effective;
  auto task_json = task.to_json();

  const auto out = prepare_out_dir(ctx);
  write_file(out / "train_log.jsonl", log.str());
  write_file(out / "reward_curve.csv", csv.str());
  write_json(out / "checkpoint.json", checkpoint);
  write_json(out / "task.json", task_json);
  write_json(out / "run_config.json", effective);

  std::cout << "grpo train: " << result.log.steps.size() << " steps, P=" << task.prompts() << " W=" << task.vocab
            << " L=" << task.length << " G=" << config.group_size;
  if (!result.log.steps.empty()) {
    std::cout << ", mean reward " << format_number(result.log.steps.front().mean_reward) << " -> "
              << format_number(result.log.steps.back().mean_reward) << ", final kl "
              << format_number(result.log.steps.back().kl);
  }
  std::cout << " -> " << (out / "train_log.jsonl").string() << '\n';
}

void run_eval(const GrpoParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  if (p.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (p.samples == 0) throw ConfigError("--samples must be >= 1");
  const auto ckpt = load_checkpoint(read_json_file(p.checkpoint, "checkpoint"));
  const double mean = evaluate_policy(ckpt.policy, ckpt.task, p.samples, ctx.seed);
  nlohmann::json report = {
      {"mean_reward", mean},
      {"samples_per_prompt", p.samples},
      {"prompts", ckpt.task.prompts()},
      {"trained_steps", ckpt.next_step},
      {"provenance", effective},
  };
  const auto out = prepare_out_dir(ctx);
  write_json(out / "eval.json", report);
  write_json(out / "run_config.json", effective);
  std::cout << "grpo eval: mean reward " << format_number(mean) << " over " << p.samples * ckpt.task.prompts()
            << " rollouts (checkpoint after " << ckpt.next_step << " steps)\n";
}

}  // namespace

void register_grpo(CLI::App& app, RunContext& ctx, Registry& registry) {
  auto* grpo = app.add_subcommand("grpo", "GRPO on synthetic token-sequence tasks");
  grpo->require_subcommand(1);
  auto params = std::make_shared<GrpoParams>();
  auto& cfg = params->config;

  auto* tr = grpo->add_subcommand("train", "Train a tabular policy; writes log, reward curve and checkpoint");
  tr->add_option("--task", params->task_file, "Task JSON (overrides the generator flags)");
  tr->add_option("--prompts,-P", params->prompts, "Generated task: prompts")->capture_default_str();
  tr->add_option("--vocab,-W", params->vocab, "Generated task: token vocabulary")->capture_default_str();
  tr->add_option("--length,-L", params->length, "Generated task: sequence length")->capture_default_str();
  tr->add_option("--task-seed", params->task_seed, "Generated task: target seed")->capture_default_str();
  tr->add_option("--adapter", params->adapter, "sequence_only | templated_text")->capture_default_str();
  tr->add_option("--group-size,-G", cfg.group_size, "Responses per group")->capture_default_str();
  tr->add_option("--clip-eps", cfg.clip_eps, "Clip epsilon")->capture_default_str();
  tr->add_option("--kl-beta", cfg.kl_beta, "KL penalty weight")->capture_default_str();
  tr->add_option("--lr", cfg.learning_rate, "Learning rate")->capture_default_str();
  tr->add_option("--rollout-batch", cfg.rollout_batch, "Groups sampled per step (0 = P)")->capture_default_str();
  tr->add_option("--update-batch", cfg.update_batch, "Groups per update (0 = all)")->capture_default_str();
  tr->add_option("--inner-epochs", cfg.inner_epochs, "Updates per rollout batch")->capture_default_str();
  tr->add_option("--eps-std", cfg.eps_std, "Advantage std floor")->capture_default_str();
  tr->add_option("--steps", cfg.steps, "Training steps")->capture_default_str();
  tr->add_option("--optimizer", params->optimizer, "sgd | adam")->capture_default_str();
  tr->add_option("--adam-beta1", cfg.adam_beta1)->capture_default_str();
  tr->add_option("--adam-beta2", cfg.adam_beta2)->capture_default_str();
  tr->add_option("--adam-eps", cfg.adam_eps)->capture_default_str();
  add_common_options(tr, ctx);
  registry.push_back({tr, [params](const RunContext& c, const nlohmann::json& e) { run_train(*params, c, e); }});

  auto* ev = grpo->add_subcommand("eval", "Mean reward of a checkpoint over fresh rollouts");
  ev->add_option("--checkpoint", params->checkpoint, "checkpoint.json from grpo train");
  ev->add_option("--samples", params->samples, "Rollouts per prompt")->capture_default_str();
  add_common_options(ev, ctx);
  registry.push_back({ev, [params](const RunContext& c, const nlohmann::json& e) { run_eval(*params, c, e); }});
}

}  // namespace actalign::cli
