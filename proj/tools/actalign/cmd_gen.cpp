#include <iostream>
#include <memory>
#include <sstream>

#include "actalign/traj_data.hpp"
#include "cli.hpp"

namespace actalign::cli {

namespace {

struct GenParams {
  std::size_t count = 100;
  std::size_t horizon = 8;
  std::size_t dims = kDefaultDims;
  std::string profile = "smooth";
};

void run_gen(const GenParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto profile = parse_profile(p.profile);
  const auto trajectories = gen_synthetic(p.count, p.horizon, p.dims, ctx.seed, profile);
  const auto out = prepare_out_dir(ctx);

  std::ostringstream buf;
  write_trajectories(buf, trajectories);
  write_file(out / "trajectories.jsonl", buf.str());
  write_json(out / "run_config.json", effective);
  std::cout << "gen synthetic: " << trajectories.size() << " trajectories (H=" << p.horizon << ", D=" << p.dims
            << ", profile=" << p.profile << ") -> " << (out / "trajectories.jsonl").string() << '\n';
}

}  // namespace

void register_gen(CLI::App& app, RunContext& ctx, Registry& registry) {
  auto* gen = app.add_subcommand("gen", "Generate synthetic data");
  gen->require_subcommand(1);

  auto params = std::make_shared<GenParams>();
  auto* synth = gen->add_subcommand("synthetic", "Synthetic trajectories as JSONL");
  synth->add_option("--count,-n", params->count, "Number of trajectories")->capture_default_str();
  synth->add_option("--horizon,-H", params->horizon, "Timesteps per trajectory")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--dims,-D", params->dims, "Action dimensionality")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--profile", params->profile, "smooth | step | mixed")->capture_default_str();
  add_common_options(synth, ctx);
  registry.push_back({synth, [params](const RunContext& c, const nlohmann::json& e) { run_gen(*params, c, e); }});
}

}  // namespace actalign::cli
