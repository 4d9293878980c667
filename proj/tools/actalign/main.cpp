#include <algorithm>
#include <iostream>

#include "actalign/error.hpp"
#include "cli.hpp"

namespace {

int report(actalign::cli::ExitCode code, const char* kind, std::string reason) {
  std::replace(reason.begin(), reason.end(), '\n', ' ');
  std::cerr << "actalign: error[" << kind << "]: " << reason << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace actalign::cli;

  CLI::App app{"actalign: action tokenization, verifiable rewards, GRPO and representation probes"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  RunContext ctx;
  Registry registry;
  register_tokenizer(app, ctx, registry);
  register_grpo(app, ctx, registry);
  register_reward(app, ctx, registry);
  register_analyze(app, ctx, registry);
  register_gen(app, ctx, registry);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    args.pop_back();  // program name
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(kConfigError, "config", e.what());
  } catch (const actalign::Error& e) {
    return report(kConfigError, "config", e.what());
  }

  const auto it = std::find_if(registry.begin(), registry.end(), [](const Command& c) { return c.app->parsed(); });
  if (it == registry.end()) return report(kConfigError, "config", "missing action; see --help");

  try {
    it->run(ctx, effective_config(*it->app));
  } catch (const actalign::Error& e) {
    switch (e.kind()) {
      case actalign::ErrorKind::config: return report(kConfigError, "config", e.what());
      case actalign::ErrorKind::data: return report(kDataError, "data", e.what());
      case actalign::ErrorKind::numeric: return report(kNumericError, "numeric", e.what());
    }
  } catch (const std::exception& e) {
    return report(kDataError, "data", e.what());
  }
  return kOk;
}
