#pragma once

#include <yaml-cpp/yaml.h>

#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"
#include "kslab/evolve.hpp"

namespace kslab::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int flagged = 2;
inline constexpr int runtime = 3;
}  // namespace exit_code

struct SimulationResult {
  RunResult run;
  double initial_mass = 0.0;
  double final_mass = 0.0;
  /// Mean of linf_u over the final quarter of the diagnostic records.
  double linf_plateau = 0.0;
};

double linf_plateau(std::span<const DiagRecord> trajectory);

/// Runs the configured simulation. When `mass` is set, u0 is rescaled to it.
/// With `output_dir`, trajectory, snapshots and summary.json are written there.
SimulationResult run_simulation(const ScenarioConfig& config, const std::optional<std::string>& output_dir,
                                std::optional<double> mass = std::nullopt);

int cmd_simulate(const ScenarioConfig& config, std::ostream& out, std::ostream& err);
int cmd_check(const ScenarioConfig& config, std::ostream& out, std::ostream& err);
int cmd_steady(const ScenarioConfig& config, std::ostream& out, std::ostream& err);
/// `root` is the merged YAML tree the config was parsed from; each lattice
/// point re-parses a copy with the axis keys set.
int cmd_sweep(const YAML::Node& root, const ScenarioConfig& config, std::ostream& out, std::ostream& err);

}  // namespace kslab::cli
