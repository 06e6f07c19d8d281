// kraus-scope: reproducible end-to-end estimation runs for a free-space
// optical channel -- kernel verification, channel synthesis, tomography and
// design feasibility, driven by a JSON config.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "krausscope/experiment.hpp"
#include "krausscope/serialize.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "experiment config JSON");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "override the channel seed from the config");
  cmd->add_option("--out", args.out_dir, "override the output directory");
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

krausscope::ExperimentConfig load_config(const CommonArgs& args) {
  krausscope::ExperimentConfig cfg;
  if (!args.config_path.empty())
    cfg = krausscope::parse_experiment_config(krausscope::read_json_file(args.config_path));
  if (args.seed) cfg.channel.seed = *args.seed;
  if (args.out_dir) cfg.output_dir = *args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kraus-scope: classical estimation of a free-space OAM channel"};
  app.require_subcommand(1);

  CommonArgs verify_args, tomo_args, chan_args, design_args;
  auto* verify = app.add_subcommand("verify-kernel", "closed-form overlaps vs the quadrature oracle");
  add_common(verify, verify_args, true);
  auto* tomo = app.add_subcommand("run-tomography", "simulate and reconstruct a channel end to end");
  add_common(tomo, tomo_args, true);
  auto* chan = app.add_subcommand("simulate-channel", "build the configured channel and export it");
  add_common(chan, chan_args, true);
  auto* design = app.add_subcommand("design", "feasibility numbers for the comb/SLM setup");
  add_common(design, design_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      const auto cfg = load_config(verify_args);
      const auto result = krausscope::run_verify_kernel(cfg, verify_args.quiet);
      return result.tolerances_met ? krausscope::kExitOk : krausscope::kExitToleranceBreach;
    }
    if (tomo->parsed()) {
      const auto cfg = load_config(tomo_args);
      return krausscope::run_tomography(cfg, tomo_args.quiet);
    }
    if (chan->parsed()) {
      const auto cfg = load_config(chan_args);
      return krausscope::run_simulate_channel(cfg, chan_args.quiet);
    }
    if (design->parsed()) {
      const auto cfg = load_config(design_args);
      return krausscope::run_design(cfg, design_args.quiet);
    }
  } catch (const krausscope::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return krausscope::kExitValidationFailure;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return krausscope::kExitValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return krausscope::kExitOk;
}
