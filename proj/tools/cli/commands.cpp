#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include "json.hpp"
#include <ostream>
#include <sstream>
#include <thread>

#include "kslab/errors.hpp"
#include "kslab/steady.hpp"

namespace kslab::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path prepare_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory '" + dir + "'");
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

std::string snapshot_name(const std::string& field, long index) {
  std::ostringstream os;
  os << field << '_' << std::setw(4) << std::setfill('0') << index << ".csv";
  return os.str();
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os = open_out(path);
  os << j.dump(2) << '\n';
}

}  // namespace

double linf_plateau(std::span<const DiagRecord> trajectory) {
  if (trajectory.empty()) return 0.0;
  const std::size_t n = trajectory.size();
  const std::size_t count = std::max<std::size_t>(1, n / 4);
  double s = 0.0;
  for (std::size_t i = n - count; i < n; ++i) s += trajectory[i].linf_u;
  return s / static_cast<double>(count);
}

SimulationResult run_simulation(const ScenarioConfig& config, const std::optional<std::string>& output_dir,
                                std::optional<double> mass) {
  const GridPtr grid = make_grid(config);
  const MotilityPair pair = make_motility(config);
  Field u0 = make_initial(config, grid);
  if (mass) {
    if (!(*mass > 0.0)) throw ConfigError("mass must be positive");
    u0 = u0 * (*mass / integrate(u0));
  }
  EvolveConfig ev = make_evolve_config(config);

  std::optional<fs::path> dir;
  std::optional<fs::path> snaps;
  if (output_dir) {
    dir = prepare_dir(*output_dir);
    snaps = prepare_dir((*dir / "snapshots").string());
    long sample = 0;
    const int every = config.output.snapshot_every;
    ev.on_sample = [&, every](const SimState& s, const DiagRecord&) {
      if (sample == 0 || (every > 0 && sample % every == 0)) {
        write_snapshot((*snaps / snapshot_name("u", sample)).string(), s.u);
        write_snapshot((*snaps / snapshot_name("v", sample)).string(), s.v);
      }
      ++sample;
    };
  }

  const double initial_mass = integrate(u0);
  SimulationResult out{run(u0, pair, config.d, ev)};
  out.initial_mass = initial_mass;
  out.final_mass = integrate(out.run.final_state.u);
  out.linf_plateau = linf_plateau(out.run.trajectory);

  if (dir) {
    {
      std::ofstream os = open_out(*dir / "trajectory.csv");
      write_trajectory_csv(os, out.run.trajectory);
    }
    write_snapshot((*snaps / "u_final.csv").string(), out.run.final_state.u);
    write_snapshot((*snaps / "v_final.csv").string(), out.run.final_state.v);
    const bool blowup = out.run.outcome.kind == Outcome::Kind::blowup_suspected;
    json summary;
    summary["outcome"] = blowup ? "blowup_suspected" : "completed";
    summary["t_star"] = blowup ? json(out.run.outcome.t_star) : json(nullptr);
    summary["reason"] = out.run.outcome.reason;
    summary["initial_mass"] = out.initial_mass;
    summary["final_mass"] = out.final_mass;
    summary["measured_eta"] = out.run.final_state.measured_eta;
    summary["linf_plateau"] = out.linf_plateau;
    summary["final_time"] = out.run.final_state.t;
    summary["steps"] = out.run.steps;
    summary["positivity_clipped_count"] = out.run.final_state.positivity_clipped_count;
    summary["motility"] = pair.describe();
    write_json(*dir / "summary.json", summary);
  }
  return out;
}

int cmd_simulate(const ScenarioConfig& config, std::ostream& out, std::ostream&) {
  const SimulationResult r = run_simulation(config, config.output.dir);
  const bool blowup = r.run.outcome.kind == Outcome::Kind::blowup_suspected;
  out << "outcome: " << (blowup ? "blowup_suspected" : "completed");
  if (blowup) out << " at t* = " << r.run.outcome.t_star << " (" << r.run.outcome.reason << ")";
  out << "\nfinal mass: " << std::setprecision(12) << r.final_mass << "\nmeasured eta: " << r.run.final_state.measured_eta
      << "\nlinf plateau: " << r.linf_plateau << "\nsteps: " << r.run.steps << '\n';
  return blowup ? exit_code::flagged : exit_code::ok;
}

int cmd_check(const ScenarioConfig& config, std::ostream& out, std::ostream& err) {
  const GridPtr grid = make_grid(config);
  const MotilityPair pair = make_motility(config);
  const Field u0 = make_initial(config, grid);
  const int n = config.check.n.value_or(grid->domain().spatial_dimension());
  const double m = integrate(u0);
  double eta = 0.0;
  EtaMode mode = EtaMode::user;
  if (config.check.eta_mode == "measured") {
    mode = EtaMode::measured;
    eta = run_simulation(config, std::nullopt).run.final_state.measured_eta;
  } else {
    if (!config.check.eta) throw ConfigError("check.eta is required when check.eta_mode is user");
    eta = *config.check.eta;
  }
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  CheckOptions options;
  options.v_max = config.check.v_max;
  options.samples = config.check.samples;
  HypothesisReport report;
  try {
    report = check_hypotheses(pair, n, eta, config.d, m, mode, options);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const std::string text = report_to_json(report);
  out << text << '\n';
  {
    const fs::path dir = prepare_dir(config.output.dir);
    std::ofstream os = open_out(dir / "hypotheses.json");
    os << text << '\n';
  }
  for (const Condition* c : report.conditions()) {
    if (!c->applicable || c->pass) continue;
    err << "FAIL " << c->name << ": " << c->detail << "; witness " << c->witness_lhs;
    if (c->witness_mid) err << " < " << *c->witness_mid;
    err << " vs bound " << c->witness_rhs << '\n';
  }
  return report.all_applicable_pass() ? exit_code::ok : exit_code::flagged;
}

int cmd_steady(const ScenarioConfig& config, std::ostream& out, std::ostream& err) {
  const GridPtr grid = make_grid(config);
  const SteadySpec& st = config.steady;
  const MotilitySpec& mot = config.motility;
  const double m = st.m.value_or(integrate(make_initial(config, grid)));

  SteadyProblem problem;
  if (st.kind == "algebraic") {
    double k = 0.0;
    if (st.k) {
      k = *st.k;
    } else if (mot.family == "ks_algebraic") {
      k = (1.0 - mot.alpha) * mot.lambda;
    } else {
      throw ConfigError("steady.k is required unless motility.family is ks_algebraic");
    }
    if (st.parameter != "d") throw ConfigError("the algebraic steady problem is continued in d");
    try {
      problem = SteadyProblem::algebraic(grid, k, config.d, m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    double chi_eff = 1.0;
    if (st.chi_eff) {
      chi_eff = *st.chi_eff;
    } else if (mot.family == "ks_exponential") {
      chi_eff = mot.chi * (1.0 - mot.alpha);
    }
    try {
      problem = SteadyProblem::exponential(grid, chi_eff * m, config.d, chi_eff);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto parameter = st.parameter == "d" ? ContinuationParameter::d : ContinuationParameter::m_tilde;
  const std::vector<double> values = linspace(st.start, st.stop, st.points);
  for (double v : values) {
    if (!(v > 0.0)) throw ConfigError("steady parameter values must be positive");
  }

  ContinuationOptions options;
  options.newton.tolerance = st.tolerance;
  options.max_log_jump = st.max_log_jump;

  ContinuationResult result;
  try {
    if (st.points == 1) {
      SteadyProblem p = problem;
      if (parameter == ContinuationParameter::d) {
        p.d = values[0];
      } else {
        p.m_tilde = values[0];
        p.m = values[0] / p.chi_eff;
      }
      const double c = p.kind == SteadyKind::exponential ? p.m_tilde / grid->measure() : 1.0;
      Field guess = Field::constant(grid, c);
      ConvergedFrom from = ConvergedFrom::constant_guess;
      if (st.guess == "perturbed") {
        guess = perturbed_constant_guess(grid, c);
        from = ConvergedFrom::perturbed_guess;
      } else if (st.guess == "random") {
        guess = random_positive_guess(grid, c, config.seed);
        from = ConvergedFrom::perturbed_guess;
      }
      const SteadySolution s = solve_steady(p, guess, options.newton);
      BranchPoint b;
      b.parameter = values[0];
      b.amplitude = s.amplitude;
      b.residual = s.residual;
      b.converged_from = from;
      b.max_v = s.v.max();
      b.min_v = s.v.min();
      b.theta = s.theta;
      b.solution = s;
      result.points.push_back(std::move(b));
    } else {
      result = continuation(problem, parameter, values, options);
    }
  } catch (const ConvergenceError& e) {
    err << "Newton failed at the first point: " << e.what() << '\n';
    return exit_code::flagged;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const fs::path dir = prepare_dir(config.output.dir);
  {
    std::ofstream os = open_out(dir / "branch.csv");
    write_branch_csv(os, result);
  }
  const SteadySolution& last = *result.points.back().solution;
  write_snapshot((dir / "steady_v.csv").string(), last.v);
  write_snapshot((dir / "steady_u.csv").string(), last.u);

  json summary;
  summary["parameter"] = st.parameter;
  json pts = json::array();
  for (const auto& p : result.points) {
    pts.push_back({{"parameter", p.parameter},
                   {"amplitude", p.amplitude},
                   {"residual", p.residual},
                   {"converged_from", to_string(p.converged_from)}});
  }
  summary["points"] = pts;
  summary["threshold_interval"] =
      result.threshold_interval ? json::array({result.threshold_interval->first, result.threshold_interval->second})
                                : json(nullptr);
  summary["threshold_estimate"] = result.threshold_estimate ? json(*result.threshold_estimate) : json(nullptr);
  summary["terminations"] = result.terminations;
  write_json(dir / "steady.json", summary);

  out << "points: " << result.points.size() << '\n';
  if (result.threshold_interval) {
    out << "amplitude crosses threshold in [" << result.threshold_interval->first << ", "
        << result.threshold_interval->second << "], estimate " << *result.threshold_estimate << '\n';
  } else {
    out << "no amplitude crossing in the parameter range\n";
  }
  return exit_code::ok;
}

int cmd_sweep(const YAML::Node& root, const ScenarioConfig& config, std::ostream& out, std::ostream& err) {
  if (config.sweep.empty()) throw ConfigError("sweep needs at least one axis");
  std::size_t total = 1;
  for (const auto& axis : config.sweep) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.key + "' has no values");
    total *= axis.values.size();
  }

  struct Row {
    std::vector<double> params;
    std::string outcome;
    double linf_plateau = std::nan("");
    std::string error;
  };
  std::vector<Row> rows(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    std::vector<double> params(config.sweep.size());
    for (std::size_t a = config.sweep.size(); a-- > 0;) {
      const auto& vals = config.sweep[a].values;
      params[a] = vals[rest % vals.size()];
      rest /= vals.size();
    }
    rows[idx].params = std::move(params);
  }

  // Parse every lattice point up front so configuration errors surface before any run.
  std::vector<ScenarioConfig> configs;
  std::vector<std::optional<double>> masses(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    YAML::Node copy = YAML::Clone(root);
    for (std::size_t a = 0; a < config.sweep.size(); ++a) {
      if (config.sweep[a].key == "mass") {
        masses[idx] = rows[idx].params[a];
      } else {
        set_key(copy, config.sweep[a].key, YAML::Node(rows[idx].params[a]));
      }
    }
    configs.push_back(parse_config(copy));
  }

  std::atomic<std::size_t> next{0};
  std::mutex collector;
  auto worker = [&]() {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      Row local = rows[idx];
      try {
        const SimulationResult r = run_simulation(configs[idx], std::nullopt, masses[idx]);
        local.outcome = r.run.outcome.kind == Outcome::Kind::blowup_suspected ? "blowup_suspected" : "completed";
        local.linf_plateau = r.linf_plateau;
      } catch (const std::exception& e) {
        local.outcome = "failed";
        local.error = e.what();
      }
      std::lock_guard lock(collector);
      rows[idx] = std::move(local);
    }
  };
  const int n_threads = std::max(1, std::min<int>(config.threads, static_cast<int>(total)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const fs::path dir = prepare_dir(config.output.dir);
  std::ofstream os = open_out(dir / "sweep.csv");
  os << std::setprecision(17);
  for (const auto& axis : config.sweep) os << axis.key << ',';
  os << "outcome,linf_plateau\n";
  std::size_t ran = 0;
  for (const Row& r : rows) {
    for (double p : r.params) os << p << ',';
    os << r.outcome << ',';
    if (std::isfinite(r.linf_plateau)) {
      os << r.linf_plateau;
    } else {
      os << "nan";
    }
    os << '\n';
    if (r.outcome != "failed") {
      ++ran;
    } else {
      err << "lattice point";
      for (double p : r.params) err << ' ' << p;
      err << " failed: " << r.error << '\n';
    }
  }
  out << ran << " of " << total << " lattice points ran\n";
  return ran > 0 ? exit_code::ok : exit_code::flagged;
}

}  // namespace kslab::cli
