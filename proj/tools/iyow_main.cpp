// iyow: staged pipeline driver.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <CLI11.hpp>

#include <iostream>

#include "iyow/config.hpp"
#include "iyow/error.hpp"
#include "iyow/pipeline.hpp"

namespace {

constexpr int kConfigFailure = 2;
constexpr int kStageFailure = 3;

struct RunArgs {
  std::string config;
  std::string stages = "embed,train,interpret,annotate,analyze,report";
  std::string axis;
  bool dry_run = false;
  bool mock = false;
};

int run_command(const RunArgs& args) {
  iyow::RunConfig config;
  iyow::RunOptions options;
  try {
    config = iyow::load_config(args.config);
    options.stages = iyow::parse_stage_list(args.stages);
    if (!args.axis.empty()) {
      options.axis = iyow::parse_axis(args.axis);
      if (!options.axis) throw iyow::ConfigError("--axis: unknown axis '" + args.axis + "'");
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  }
  options.dry_run = args.dry_run;
  options.mock_providers = args.mock;
  options.log = &std::cout;
  if (args.dry_run) std::cout << "dry run: nothing will be written\n";

  try {
    const auto summary = iyow::run_pipeline(config, options);
    if (!args.dry_run) std::cout << "provider calls: " << summary.provider_calls << "\n";
    return 0;
  } catch (const iyow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turn free-text identity responses into themes and test what they add"};
  app.require_subcommand(1);

  RunArgs args;
  auto* run = app.add_subcommand("run", "Run pipeline stages for the configured axes");
  run->add_option("--config", args.config, "Path to the JSON run config")->required();
  run->add_option("--stages", args.stages, "Comma-separated subset of embed,train,interpret,annotate,analyze,report");
  run->add_option("--axis", args.axis, "Restrict to one axis: race, gender or sexual_orientation");
  run->add_flag("--dry-run", args.dry_run, "Print the stage plan without writing anything");
  run->add_flag("--mock-providers", args.mock, "Use deterministic offline embedding and chat providers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }
  return run_command(args);
}
