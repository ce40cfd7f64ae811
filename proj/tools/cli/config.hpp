#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kslab/evolve.hpp"
#include "kslab/grid.hpp"
#include "kslab/motility.hpp"
#include "kslab/steady.hpp"

namespace kslab::cli {

/// Invalid or unreadable configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DomainSpec {
  std::string shape = "interval";
  double length = 1.0;
  double lx = 1.0;
  double ly = 1.0;
  double radius = 1.0;
  bool operator==(const DomainSpec&) const = default;
};

struct ResolutionSpec {
  int nx = 64;
  int ny = 64;
  bool operator==(const ResolutionSpec&) const = default;
};

struct MotilitySpec {
  std::string family = "ks_exponential";
  double sigma1 = 1.0, sigma2 = 1.0, lambda1 = 1.0, lambda2 = 2.0;
  double chi1 = 1.0, chi2 = 1.0, delta = 1.0;
  double sigma = 1.0, lambda = 1.0;
  double chi = 1.0, alpha = 0.0;
  std::string gamma, dgamma, phi, dphi;
  bool operator==(const MotilitySpec&) const = default;
};

struct CosineMode {
  int kx = 1;
  int ky = 0;
  double amplitude = 0.3;
  bool operator==(const CosineMode&) const = default;
};

/// u0 generators: constant `mean`; `mean * (1 + sum a cos(kx pi x/Lx) cos(ky pi y/Ly))`
/// (radial: cos(kx pi r/R)); or a gaussian bump of total `mass` over `background`.
/// `noise` multiplies u0 by (1 + noise * U(-1, 1)) per cell, seeded.
struct InitialSpec {
  std::string kind = "cosine";
  double mean = 1.0;
  std::vector<CosineMode> modes{CosineMode{}};
  double center_x = 0.0;
  double center_y = 0.0;
  double width = 0.1;
  double mass = 1.0;
  double background = 0.0;
  double noise = 0.0;
  bool operator==(const InitialSpec&) const = default;
};

struct EvolveSpec {
  double horizon = 10.0;
  double cadence = 0.1;
  double p = 2.0;
  std::optional<double> lambda;
  double blowup_factor = 1e4;
  double dt_floor = 1e-12;
  double safety = 0.4;
  std::optional<double> dt_max;
  std::string time_scheme = "euler";
  std::string flux_scheme = "upwind";
  double clip_tolerance = 1e-6;
  bool operator==(const EvolveSpec&) const = default;
};

struct CheckSpec {
  /// Defaults to the spatial dimension of the domain.
  std::optional<int> n;
  std::string eta_mode = "user";
  /// Required in user mode.
  std::optional<double> eta;
  double v_max = 1e3;
  int samples = 20000;
  bool operator==(const CheckSpec&) const = default;
};

struct SteadySpec {
  std::string kind = "algebraic";
  /// Defaults to (1 - alpha) lambda for ks_algebraic motility.
  std::optional<double> k;
  /// Defaults to the mass of u0.
  std::optional<double> m;
  /// Defaults to chi (1 - alpha) for ks_exponential motility, else 1.
  std::optional<double> chi_eff;
  std::string parameter = "d";
  double start = 0.15;
  double stop = 0.02;
  int points = 14;
  /// Guess for single-point solves: perturbed, constant or random (seeded).
  std::string guess = "perturbed";
  double tolerance = 1e-10;
  double max_log_jump = 0.5;
  bool operator==(const SteadySpec&) const = default;
};

struct SweepAxis {
  /// Dotted config key (e.g. `motility.chi`, `d`) or `mass`, which rescales u0.
  std::string key;
  std::vector<double> values;
  bool operator==(const SweepAxis&) const = default;
};

struct OutputSpec {
  std::string dir = "out";
  /// Write u and v snapshots every this many diagnostic samples (0: first and last only).
  int snapshot_every = 10;
  bool operator==(const OutputSpec&) const = default;
};

struct ScenarioConfig {
  DomainSpec domain;
  ResolutionSpec resolution;
  MotilitySpec motility;
  double d = 1.0;
  InitialSpec initial;
  EvolveSpec evolve;
  CheckSpec check;
  SteadySpec steady;
  std::vector<SweepAxis> sweep;
  OutputSpec output;
  std::uint64_t seed = 0;
  int threads = 1;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Applies `PREFIX<SECTION>__<KEY>=value` environment overrides to a YAML
/// tree; values are parsed as YAML scalars or flow collections.
void apply_env_overrides(YAML::Node& root, char** envp, const std::string& prefix = "KSLAB_");
/// Sets a dotted key (`evolve.horizon`) in a YAML tree.
void set_key(YAML::Node& root, const std::string& dotted, const YAML::Node& value);

/// Strict parse: unknown keys and invalid values throw ConfigError.
ScenarioConfig parse_config(const YAML::Node& root);
YAML::Node load_config_file(const std::string& path);
YAML::Node to_yaml(const ScenarioConfig& config);
std::string to_yaml_string(const ScenarioConfig& config);

GridPtr make_grid(const ScenarioConfig& config);
MotilityPair make_motility(const ScenarioConfig& config);
/// Samples the initial generator; validates u0 >= 0 and positive mass.
Field make_initial(const ScenarioConfig& config, const GridPtr& grid);
EvolveConfig make_evolve_config(const ScenarioConfig& config);

}  // namespace kslab::cli
