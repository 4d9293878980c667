#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "actalign/error.hpp"
#include "actalign/reward.hpp"
#include "cli.hpp"

namespace actalign::cli {

namespace {

struct RewardParams {
  std::string input;
  std::string instruction;
};

ActionTokenSeq target_from_row(const nlohmann::json& row) {
  const auto it = row.find("target_ids");
  if (it == row.end() || !it->is_array()) throw DataError("row needs a 'target_ids' array");
  ActionTokenSeq target;
  for (const auto& x : *it) {
    if (!x.is_number_unsigned() || x.get<std::uint64_t>() > std::numeric_limits<TokenId>::max()) {
      throw DataError("target_ids must be non-negative 32-bit integers");
    }
    target.ids.push_back(x.get<TokenId>());
  }
  if (target.ids.empty()) throw DataError("target_ids is empty");
  return target;
}

void run_score_batch(const RewardParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  if (p.input.empty()) throw ConfigError("--input is required");
  std::ifstream in(p.input);
  if (!in) throw DataError("cannot open reward batch " + p.input);

  std::ostringstream buf;
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t well_formed = 0;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    RewardBreakdown r;
    try {
      const auto row = nlohmann::json::parse(line);
      if (!row.is_object()) throw DataError("row is not a JSON object");
      const auto resp = row.find("response");
      if (resp == row.end() || !resp->is_string()) throw DataError("row needs a string 'response'");
      r = score(resp->get<std::string>(), target_from_row(row));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("reward batch line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("reward batch line " + std::to_string(line_no) + ": " + e.what());
    }
    nlohmann::json out_row = {{"r_f", r.r_f}, {"r_a", r.r_a}, {"r", r.r}};
    out_row["defect"] = r.defect ? nlohmann::json(to_string(*r.defect)) : nlohmann::json(nullptr);
    buf << out_row.dump() << '\n';
    ++rows;
    well_formed += static_cast<std::size_t>(r.r_f);
    total += r.r;
    if (ctx.verbose) std::cout << "row " << rows << ": r=" << format_number(r.r) << '\n';
  }

  const auto out = prepare_out_dir(ctx);
  write_file(out / "rewards.jsonl", buf.str());
  write_json(out / "run_config.json", effective);
  std::cout << "reward score-batch: " << rows << " rows, " << well_formed << " well-formed, mean r "
            << format_number(rows == 0 ? 0.0 : total / static_cast<double>(rows)) << " -> "
            << (out / "rewards.jsonl").string() << '\n';
}

void run_prompt(const RewardParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  if (p.instruction.empty()) throw ConfigError("--instruction is required");
  const auto text = render_prompt(p.instruction);
  const auto out = prepare_out_dir(ctx);
  write_file(out / "prompt.txt", text + "\n");
  write_json(out / "run_config.json", effective);
  std::cout << text << '\n';
}

}  // namespace

void register_reward(CLI::App& app, RunContext& ctx, Registry& registry) {
  auto* reward = app.add_subcommand("reward", "Format and accuracy rewards");
  reward->require_subcommand(1);
  auto params = std::make_shared<RewardParams>();

  auto* batch = reward->add_subcommand("score-batch", "Score {response, target_ids} rows; writes rewards.jsonl");
  batch->add_option("--input,-i", params->input, "Reward batch JSONL");
  add_common_options(batch, ctx);
  registry.push_back(
      {batch, [params](const RunContext& c, const nlohmann::json& e) { run_score_batch(*params, c, e); }});

  auto* prompt = reward->add_subcommand("prompt", "Render the RL prompt for an instruction");
  prompt->add_option("--instruction", params->instruction, "Task instruction");
  add_common_options(prompt, ctx);
  registry.push_back({prompt, [params](const RunContext& c, const nlohmann::json& e) { run_prompt(*params, c, e); }});
}

}  // namespace actalign::cli
