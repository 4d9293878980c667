#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace actalign::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kNumericError = 4 };

// Options every leaf subcommand accepts.
struct RunContext {
  std::string config_path;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool verbose = false;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void(const RunContext&, const nlohmann::json& effective)> run;
};

using Registry = std::vector<Command>;

void add_common_options(CLI::App* leaf, RunContext& ctx);

// Values of every option on `leaf` after parsing, as strings, except the
// ones that do not influence results (--out, --threads, --config, -v).
nlohmann::json effective_config(const CLI::App& leaf);

// Splices a flat JSON config ({"long-option": value, ...}) into the argument
// list right after "<command> <action>", so later command-line flags win.
std::vector<std::string> expand_config(std::vector<std::string> args);

std::filesystem::path prepare_out_dir(const RunContext& ctx);
void write_file(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
// Same rendering nlohmann uses for JSON numbers.
std::string format_number(double x);

void register_gen(CLI::App& app, RunContext& ctx, Registry& registry);
void register_tokenizer(CLI::App& app, RunContext& ctx, Registry& registry);
void register_reward(CLI::App& app, RunContext& ctx, Registry& registry);
void register_grpo(CLI::App& app, RunContext& ctx, Registry& registry);
void register_analyze(CLI::App& app, RunContext& ctx, Registry& registry);

}  // namespace actalign::cli
