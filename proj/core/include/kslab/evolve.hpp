#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kslab/elliptic.hpp"
#include "kslab/grid.hpp"
#include "kslab/motility.hpp"

namespace kslab {

enum class TimeScheme { euler, heun };

/// Face value of u in the advective part of the flux.
///  - upwind: donor-cell value chosen by the sign of phi(v_f) * grad v.
///  - scharfetter_gummel: exponentially fitted flux; reduces to central
///    differencing for small drift and to upwinding for large drift, and
///    keeps discrete equilibria u_R/u_L = exp(phi/gamma * dv) exactly.
enum class FluxScheme { upwind, scharfetter_gummel };

std::string to_string(TimeScheme s);
std::string to_string(FluxScheme s);
TimeScheme time_scheme_from_string(const std::string& s);
FluxScheme flux_scheme_from_string(const std::string& s);

struct SimState {
  Field u;
  Field v;
  double t = 0.0;
  double dt = 0.0;
  long step_index = 0;
  /// Running minimum of v over every step taken.
  double measured_eta = 0.0;
  bool blowup_suspected = false;
  int positivity_clipped_count = 0;
  /// Total mass removed by clipping before proportional restitution.
  double clipped_mass = 0.0;
};

struct DiagRecord {
  double t = 0.0;
  double mass = 0.0;
  double linf_u = 0.0;
  /// Integral of u^p.
  double lp_u = 0.0;
  double min_v = 0.0;
  double max_v = 0.0;
  double exp_moment = 0.0;
  double phi_inv_moment = 0.0;
  double dt = 0.0;
  /// Largest |grad v| over faces; not part of the CSV layout.
  double grad_v_max = 0.0;
};

struct StepOptions {
  TimeScheme scheme = TimeScheme::euler;
  /// Per-step clipped mass allowed, relative to the current mass.
  double clip_tolerance = 1e-6;
};

/// One spatial discretisation of the evolution system: grid, motility pair,
/// signal operator and flux scheme. Immutable; safe to share between threads.
class Evolver {
 public:
  Evolver(GridPtr grid, MotilityPair pair, double d, FluxScheme flux = FluxScheme::upwind);

  const Grid& grid() const { return *grid_; }
  const MotilityPair& pair() const { return pair_; }
  const EllipticOperator& elliptic() const { return elliptic_; }
  FluxScheme flux_scheme() const { return flux_; }

  /// Requires u0 >= 0 with positive mass; v is solved from u0.
  SimState initial_state(const Field& u0) const;

  /// du/dt = div(gamma(v) grad u - u phi(v) grad v) per cell.
  Field flux_divergence(const Field& u, const Field& v) const;
  void rate(std::span<const double> u, std::span<const double> v, std::span<double> out) const;

  /// safety * min(h^2/(2 D max gamma), h / max|phi grad v|), D = mesh axes.
  double stable_dt(const SimState& state, double safety = 0.4) const;

  /// Advances by dt; re-solves v. Throws PositivityError if clipping would
  /// remove more than clip_tolerance * mass.
  SimState step(const SimState& state, double dt, const StepOptions& options = {}) const;

  DiagRecord diagnostics(const SimState& state, double p, double lambda) const;

 private:
  GridPtr grid_;
  MotilityPair pair_;
  EllipticOperator elliptic_;
  FluxScheme flux_;
};

Field flux_divergence(const Field& u, const Field& v, const MotilityPair& pair,
                      FluxScheme scheme = FluxScheme::upwind);
double stable_dt(const SimState& state, const MotilityPair& pair, double safety = 0.4);

struct EvolveConfig {
  double horizon = 1.0;
  /// Diagnostic sampling interval in time.
  double cadence = 0.1;
  /// Exponent of the monitored integral of u^p and phi^{-p}.
  double p = 2.0;
  /// Exponential-moment rate; defaults to 0.9 * 4 pi d / m.
  std::optional<double> lambda;
  double blowup_factor = 1e4;
  double dt_floor = 1e-12;
  double safety = 0.4;
  std::optional<double> dt_max;
  TimeScheme time_scheme = TimeScheme::euler;
  FluxScheme flux_scheme = FluxScheme::upwind;
  double clip_tolerance = 1e-6;
  /// Called after each sampled record (including t = 0).
  std::function<void(const SimState&, const DiagRecord&)> on_sample;
  /// Stops the run early (outcome completed) when it returns true at a sample.
  std::function<bool(const SimState&)> stop_when;
};

struct Outcome {
  enum class Kind { completed, blowup_suspected };
  Kind kind = Kind::completed;
  double t_star = 0.0;
  std::string reason;
};

struct RunResult {
  std::vector<DiagRecord> trajectory;
  Outcome outcome;
  SimState final_state;
  long steps = 0;
};

/// Blow-up is flagged when max u exceeds blowup_factor times its initial
/// value, when the stable step drops below dt_floor, or on non-finite values.
RunResult run(const Field& u0, const MotilityPair& pair, double d, const EvolveConfig& config);
RunResult run(const Evolver& evolver, const Field& u0, const EvolveConfig& config);

/// Fixed column order `t,mass,linf_u,lp_u,min_v,max_v,exp_moment,phi_inv_moment,dt`.
void write_trajectory_csv(std::ostream& os, std::span<const DiagRecord> trajectory);

/// Empirical check of  d/dt int u^p + int u^p <= c0 + c1 int phi(v)^{-p}.
struct PeiReport {
  double p = 0.0;
  std::vector<double> t;
  std::vector<double> lhs;
  std::vector<double> basis;
  double c0 = 0.0;
  double c1 = 0.0;
  bool fit_ok = false;
  bool p_admissible = true;
  std::vector<std::string> warnings;
};

/// Fits the affine bound with c0, c1 >= 0 minimising its mean over the run
/// (ties broken toward smaller c1). fit_ok when both constants are <= 1e6.
/// The time derivative uses central differences (one-sided at the ends).
PeiReport monitor_pei(std::span<const DiagRecord> trajectory, double p,
                      std::optional<PRange> admissible = std::nullopt);

}  // namespace kslab
