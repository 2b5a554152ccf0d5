// Command-line front end: run, verify, smoothing, convergence, variational.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nlslab/commands.hpp"

int main(int argc, char** argv) {
  using namespace nlslab::cli;
  CLI::App app{"nlslab: 1-D cubic NLS simulation and verification laboratory"};
  app.require_subcommand(1);

  CommonOptions opts;
  opts.threads = threads_from_env();

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", opts.config_path, "Run config (JSON)");
    if (required) opt->required();
    sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--dealias", opts.dealias, "Apply the 2/3-rule dealiasing mask");
  };

  auto* run = app.add_subcommand("run", "Evolve a configured datum and write diagnostics");
  add_config(run, true);
  run->add_flag("--dump-fields", opts.dump_fields, "Write field snapshots at recorded times");

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_flag("--mutate-phase-sign", opts.mutate_phase_sign,
                   "Test hook: flip the nonlinear phase sign inside the Strang step");

  auto* smoothing = app.add_subcommand("smoothing", "Smoothing-estimate ensemble");
  add_config(smoothing, true);
  smoothing->add_option("--ensemble", opts.ensemble_path, "Ensemble spec (JSON)")->required();
  smoothing->add_option("--x0", opts.x0, "Observation point");
  smoothing->add_option("--seed", opts.seed, "Override the ensemble seed");

  auto* convergence = app.add_subcommand("convergence", "Time-step self-convergence study");
  add_config(convergence, true);
  convergence->add_option("--halvings", opts.halvings, "Number of dt halvings")->capture_default_str();

  auto* variational = app.add_subcommand("variational", "Action and center-of-mass diagnostics");
  add_config(variational, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  if (*run) return cmd_run(opts, std::cout, std::cerr);
  if (*verify) return cmd_verify(opts, std::cout, std::cerr);
  if (*smoothing) return cmd_smoothing(opts, std::cout, std::cerr);
  if (*convergence) return cmd_convergence(opts, std::cout, std::cerr);
  if (*variational) return cmd_variational(opts, std::cout, std::cerr);
  return kFailure;
}
