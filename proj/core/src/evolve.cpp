#include "kslab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kslab/errors.hpp"

namespace kslab {

std::string to_string(TimeScheme s) { return s == TimeScheme::euler ? "euler" : "heun"; }
std::string to_string(FluxScheme s) { return s == FluxScheme::upwind ? "upwind" : "scharfetter_gummel"; }

TimeScheme time_scheme_from_string(const std::string& s) {
  if (s == "euler") return TimeScheme::euler;
  if (s == "heun") return TimeScheme::heun;
  throw std::invalid_argument("unknown time scheme '" + s + "'");
}

FluxScheme flux_scheme_from_string(const std::string& s) {
  if (s == "upwind") return FluxScheme::upwind;
  if (s == "scharfetter_gummel" || s == "sg") return FluxScheme::scharfetter_gummel;
  throw std::invalid_argument("unknown flux scheme '" + s + "'");
}

namespace {

// Integrated physical flux J (from cell L into cell R) across one face with
// transmissibility t. The divergence form is u_t = -div J.
double face_flux(FluxScheme scheme, const MotilityPair& pair, double t, double uL, double uR, double vL, double vR) {
  const MotilityValues mv = pair.eval(0.5 * (vL + vR));
  const double drift = mv.phi * (vR - vL);  // phi(v_f) * grad v * h
  if (scheme == FluxScheme::upwind) {
    const double u_up = drift > 0.0 ? uL : uR;
    return t * (mv.gamma * (uL - uR) + u_up * drift);
  }
  if (drift == 0.0) return t * mv.gamma * (uL - uR);
  const double z = drift / mv.gamma;
  if (std::abs(z) < 1e-6) {
    return t * (mv.gamma * (uL - uR) + 0.5 * drift * (uL + uR));
  }
  // gamma*B(-z) = drift/(1 - e^{-z}), gamma*B(z) = drift/(e^{z} - 1).
  return t * drift * (uL / -std::expm1(-z) - uR / std::expm1(z));
}

double lp_integral(const Grid& g, std::span<const double> u, double p) {
  const auto w = g.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * std::pow(u[i], p);
  return s;
}

}  // namespace

Evolver::Evolver(GridPtr grid, MotilityPair pair, double d, FluxScheme flux)
    : grid_(grid), pair_(std::move(pair)), elliptic_(grid, d), flux_(flux) {}

SimState Evolver::initial_state(const Field& u0) const {
  if (&u0.grid() != grid_.get()) throw std::invalid_argument("initial data lives on a different grid");
  if (u0.min() < 0.0) throw std::invalid_argument("initial data must be non-negative");
  if (!(integrate(u0) > 0.0)) throw std::invalid_argument("initial data must have positive mass");
  Field v = elliptic_.solve_v(u0);
  const double eta = v.min();
  return SimState{u0, std::move(v), 0.0, 0.0, 0, eta, false, 0, 0.0};
}

void Evolver::rate(std::span<const double> u, std::span<const double> v, std::span<double> out) const {
  const Grid& g = *grid_;
  const auto w = g.weights();
  const auto tx = g.transmissibility_x();
  const auto ty = g.transmissibility_y();
  const int nx = g.nx();
  const int ny = g.ny();
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const std::size_t frow = static_cast<std::size_t>(j) * (nx + 1);
    for (int i = 1; i < nx; ++i) {
      const std::size_t L = row + i - 1;
      const std::size_t R = row + i;
      const double J = face_flux(flux_, pair_, tx[frow + i], u[L], u[R], v[L], v[R]);
      out[L] -= J;
      out[R] += J;
    }
  }
  if (g.mesh_axes() == 2) {
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t L = g.index(i, j - 1);
        const std::size_t R = g.index(i, j);
        const double J = face_flux(flux_, pair_, ty[static_cast<std::size_t>(j) * nx + i], u[L], u[R], v[L], v[R]);
        out[L] -= J;
        out[R] += J;
      }
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] /= w[c];
}

Field Evolver::flux_divergence(const Field& u, const Field& v) const {
  std::vector<double> out(u.size());
  rate(u.values(), v.values(), out);
  for (double x : out) {
    if (!std::isfinite(x)) throw std::domain_error("flux divergence produced a non-finite value");
  }
  return Field(grid_, std::move(out));
}

double Evolver::stable_dt(const SimState& state, double safety) const {
  const Grid& g = *grid_;
  const auto v = state.v.values();
  double gamma_max = 0.0;
  for (double vi : v) gamma_max = std::max(gamma_max, pair_.gamma(vi));
  double drift_max = 0.0;
  auto visit_face = [&](std::size_t L, std::size_t R, double h) {
    const MotilityValues mv = pair_.eval(0.5 * (v[L] + v[R]));
    gamma_max = std::max(gamma_max, mv.gamma);
    drift_max = std::max(drift_max, std::abs(mv.phi * (v[R] - v[L]) / h));
  };
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 1; i < g.nx(); ++i) visit_face(g.index(i - 1, j), g.index(i, j), g.hx());
  }
  if (g.mesh_axes() == 2) {
    for (int j = 1; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) visit_face(g.index(i, j - 1), g.index(i, j), g.hy());
    }
  }
  const double h = g.min_h();
  const double dims = g.mesh_axes();
  double dt = std::numeric_limits<double>::infinity();
  if (gamma_max > 0.0) dt = h * h / (2.0 * dims * gamma_max);
  if (drift_max > 0.0) dt = std::min(dt, h / drift_max);
  return safety * dt;
}

SimState Evolver::step(const SimState& state, double dt, const StepOptions& options) const {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const std::size_t n = state.u.size();
  const auto u = state.u.values();
  std::vector<double> r0(n), next(n);
  rate(u, state.v.values(), r0);
  for (std::size_t i = 0; i < n; ++i) next[i] = u[i] + dt * r0[i];

  std::vector<double> v_next(state.v.values().begin(), state.v.values().end());
  auto all_finite = [](const std::vector<double>& x) {
    return std::all_of(x.begin(), x.end(), [](double a) { return std::isfinite(a); });
  };

  SimState out = state;
  if (options.scheme == TimeScheme::heun) {
    if (!all_finite(next)) {
      out.blowup_suspected = true;
      return out;
    }
    elliptic_.solve(next, v_next, true);
    std::vector<double> r1(n);
    rate(next, v_next, r1);
    for (std::size_t i = 0; i < n; ++i) next[i] = u[i] + 0.5 * dt * (r0[i] + r1[i]);
  }
  if (!all_finite(next)) {
    out.blowup_suspected = true;
    return out;
  }

  // Positivity: clip, then rescale so the pre-clip mass is restored.
  const auto w = grid_->weights();
  double deficit = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next[i] < 0.0) deficit -= w[i] * next[i];
  }
  if (deficit > 0.0) {
    const double mass = integrate(*grid_, next);
    if (deficit > options.clip_tolerance * mass) {
      std::ostringstream os;
      os << "positivity failure at t=" << state.t + dt << ": clipping would remove " << deficit << " of mass " << mass;
      throw PositivityError(os.str());
    }
    for (double& x : next) x = std::max(x, 0.0);
    const double scale = mass / integrate(*grid_, next);
    for (double& x : next) x *= scale;
    ++out.positivity_clipped_count;
    out.clipped_mass += deficit;
  }

  elliptic_.solve(next, v_next, true);
  if (!all_finite(v_next)) {
    out.blowup_suspected = true;
    return out;
  }
  out.u = Field(grid_, std::move(next));
  out.v = Field(grid_, std::move(v_next));
  out.t = state.t + dt;
  out.dt = dt;
  out.step_index = state.step_index + 1;
  out.measured_eta = std::min(state.measured_eta, out.v.min());
  return out;
}

DiagRecord Evolver::diagnostics(const SimState& s, double p, double lambda) const {
  DiagRecord d;
  d.t = s.t;
  d.mass = integrate(s.u);
  d.linf_u = s.u.max();
  d.lp_u = lp_integral(*grid_, s.u.values(), p);
  d.min_v = s.v.min();
  d.max_v = s.v.max();
  d.exp_moment = exp_moment(s.v, lambda).value;
  d.phi_inv_moment = phi_inverse_moment(pair_, s.v, p);
  d.dt = s.dt;
  const FaceValues grad = face_gradient(s.v);
  for (double x : grad.x) d.grad_v_max = std::max(d.grad_v_max, std::abs(x));
  for (double y : grad.y) d.grad_v_max = std::max(d.grad_v_max, std::abs(y));
  return d;
}

Field flux_divergence(const Field& u, const Field& v, const MotilityPair& pair, FluxScheme scheme) {
  // The signal diffusion rate does not enter the flux; any positive value works.
  return Evolver(u.grid_ptr(), pair, 1.0, scheme).flux_divergence(u, v);
}

double stable_dt(const SimState& state, const MotilityPair& pair, double safety) {
  return Evolver(state.u.grid_ptr(), pair, 1.0).stable_dt(state, safety);
}

RunResult run(const Field& u0, const MotilityPair& pair, double d, const EvolveConfig& config) {
  return run(Evolver(u0.grid_ptr(), pair, d, config.flux_scheme), u0, config);
}

RunResult run(const Evolver& evolver, const Field& u0, const EvolveConfig& config) {
  if (!(config.horizon > 0.0)) throw std::invalid_argument("run: horizon must be positive");
  if (!(config.cadence > 0.0)) throw std::invalid_argument("run: cadence must be positive");
  if (!(config.p > 0.0)) throw std::invalid_argument("run: p must be positive");

  RunResult result{{}, {}, evolver.initial_state(u0), 0};
  SimState& state = result.final_state;
  const double mass0 = integrate(u0);
  const double linf0 = u0.max();
  const double lambda =
      config.lambda.value_or(0.9 * 4.0 * std::numbers::pi * evolver.elliptic().d() / mass0);
  const StepOptions step_options{config.time_scheme, config.clip_tolerance};

  auto flag = [&](const std::string& reason) {
    result.outcome.kind = Outcome::Kind::blowup_suspected;
    result.outcome.t_star = state.t;
    result.outcome.reason = reason;
  };

  auto sample = [&]() -> bool {
    DiagRecord rec = evolver.diagnostics(state, config.p, lambda);
    // The step that hit the sample time may be clipped; report the stable one.
    rec.dt = evolver.stable_dt(state, config.safety);
    if (config.dt_max) rec.dt = std::min(rec.dt, *config.dt_max);
    result.trajectory.push_back(rec);
    if (config.on_sample) config.on_sample(state, rec);
    if (!std::isfinite(rec.exp_moment)) {
      flag("exponential moment overflow");
      return false;
    }
    return true;
  };

  if (!sample()) return result;
  const double tiny = 1e-12 * config.horizon;
  long sample_index = 1;
  double next_sample = std::min(config.cadence, config.horizon);

  while (state.t < config.horizon - tiny) {
    const double sdt = evolver.stable_dt(state, config.safety);
    if (sdt < config.dt_floor) {
      flag("time step collapsed below dt_floor");
      break;
    }
    double dt = std::min(sdt, next_sample - state.t);
    if (config.dt_max) dt = std::min(dt, *config.dt_max);
    SimState next = evolver.step(state, dt, step_options);
    ++result.steps;
    if (next.blowup_suspected) {
      state.blowup_suspected = true;
      flag("non-finite values");
      break;
    }
    state = std::move(next);
    if (state.u.max() > config.blowup_factor * linf0) {
      state.blowup_suspected = true;
      flag("max u amplified beyond blowup_factor");
      sample();
      break;
    }
    if (state.t >= next_sample - tiny) {
      if (!sample()) break;
      if (config.stop_when && config.stop_when(state)) break;
      ++sample_index;
      next_sample = std::min(sample_index * config.cadence, config.horizon);
    }
  }
  return result;
}

void write_trajectory_csv(std::ostream& os, std::span<const DiagRecord> trajectory) {
  const auto old_precision = os.precision(17);
  os << "t,mass,linf_u,lp_u,min_v,max_v,exp_moment,phi_inv_moment,dt\n";
  for (const DiagRecord& r : trajectory) {
    os << r.t << ',' << r.mass << ',' << r.linf_u << ',' << r.lp_u << ',' << r.min_v << ',' << r.max_v << ','
       << r.exp_moment << ',' << r.phi_inv_moment << ',' << r.dt << '\n';
  }
  os.precision(old_precision);
}

}  // namespace kslab
