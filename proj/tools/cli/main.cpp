#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "kslab/errors.hpp"

extern char** environ;

namespace {

using namespace kslab::cli;

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> n;
  std::optional<std::string> eta_mode;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "Scenario config file (YAML)")->required();
  cmd->add_option("--out", flags.out, "Output directory (overrides output.dir)");
  cmd->add_option("--seed", flags.seed, "Seed for randomised initial data and guesses");
  cmd->add_option("--threads", flags.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
}

// File, then KSLAB_* environment, then command-line flags.
YAML::Node merged_config(const Flags& flags) {
  YAML::Node root = load_config_file(flags.config);
  apply_env_overrides(root, environ);
  if (flags.out) set_key(root, "output.dir", YAML::Node(*flags.out));
  if (flags.seed) set_key(root, "seed", YAML::Node(*flags.seed));
  if (flags.threads) set_key(root, "threads", YAML::Node(*flags.threads));
  if (flags.n) set_key(root, "check.n", YAML::Node(*flags.n));
  if (flags.eta_mode) set_key(root, "check.eta_mode", YAML::Node(*flags.eta_mode));
  return root;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kslab: Keller-Segel simulations with signal-dependent motility"};
  app.require_subcommand(1);
  Flags flags;

  auto* simulate = app.add_subcommand("simulate", "Run the evolution system and write trajectory, snapshots, summary");
  auto* check = app.add_subcommand("check", "Evaluate the boundedness hypotheses for the configured motility");
  auto* steady = app.add_subcommand("steady", "Solve for steady states and continue them in a parameter");
  auto* sweep = app.add_subcommand("sweep", "Run simulations over a parameter lattice");
  auto* reference = app.add_subcommand("reference-config", "Print a config with every default spelled out");
  for (auto* cmd : {simulate, check, steady, sweep}) add_common(cmd, flags);
  check->add_option("--n", flags.n, "Spatial dimension for the hypothesis check")->check(CLI::PositiveNumber);
  check->add_option("--eta-mode", flags.eta_mode, "user or measured")->check(CLI::IsMember({"user", "measured"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_code::ok : exit_code::usage;
  }

  if (reference->parsed()) {
    std::cout << to_yaml_string(ScenarioConfig{});
    return exit_code::ok;
  }

  try {
    const YAML::Node root = merged_config(flags);
    const ScenarioConfig config = parse_config(root);
    if (simulate->parsed()) return cmd_simulate(config, std::cout, std::cerr);
    if (check->parsed()) return cmd_check(config, std::cout, std::cerr);
    if (steady->parsed()) return cmd_steady(config, std::cout, std::cerr);
    return cmd_sweep(root, config, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::runtime;
  }
}
