#include "cli.hpp"

#include <fstream>
#include <set>

#include "actalign/error.hpp"

namespace actalign::cli {

void add_common_options(CLI::App* leaf, RunContext& ctx) {
  leaf->add_option("--config", ctx.config_path, "JSON file of option defaults; flags override it");
  leaf->add_option("--seed", ctx.seed, "Random seed")->capture_default_str();
  leaf->add_option("--out", ctx.out_dir, "Output directory for artifacts")->capture_default_str();
  leaf->add_option("--threads", ctx.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  leaf->add_flag("-v,--verbose", ctx.verbose, "Progress output on stdout");
}

nlohmann::json effective_config(const CLI::App& leaf) {
  static const std::set<std::string> skipped = {"help", "config", "out", "threads", "verbose"};
  nlohmann::json options = nlohmann::json::object();
  for (const CLI::Option* opt : leaf.get_options()) {
    const std::string name = opt->get_single_name();
    if (skipped.count(name) != 0) continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      options[name] = results.size() == 1 ? nlohmann::json(results.front()) : nlohmann::json(results);
    } else if (opt->get_type_size() == 0) {
      options[name] = "false";
    } else {
      options[name] = opt->get_default_str();
    }
  }
  const CLI::App* parent = leaf.get_parent();
  return {{"command", (parent ? parent->get_name() + " " : std::string()) + leaf.get_name()},
          {"options", std::move(options)}};
}

std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw ConfigError("config file may not set 'config'");
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      injected.push_back(flag);
      injected.push_back(value.dump());
    } else {
      throw ConfigError("config key '" + key + "' must be a string, number or boolean");
    }
  }

  // Insert after the leading positional words (command and action).
  std::size_t at = 1;
  while (at < args.size() && at < 3 && !args[at].starts_with("-")) ++at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return args;
}

std::filesystem::path prepare_out_dir(const RunContext& ctx) {
  std::error_code ec;
  std::filesystem::create_directories(ctx.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
  return ctx.out_dir;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

std::string format_number(double x) { return nlohmann::json(x).dump(); }

}  // namespace actalign::cli
