// Acceptance suite: runs each criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kslab/elliptic.hpp"
#include "kslab/evolve.hpp"
#include "kslab/grid.hpp"
#include "kslab/motility.hpp"
#include "kslab/steady.hpp"

using namespace kslab;
using std::numbers::pi;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Field random_field(const GridPtr& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(g->size());
  for (double& x : v) x = U(rng);
  return Field(g, std::move(v));
}

double weighted_sum(const Field& f, double power = 1.0) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.grid().weights()[i] * std::pow(f[i], power);
  return s;
}

double rel_linf(const Field& a, const Field& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e / b.max();
}

Field cosine_ic(const GridPtr& g, double mean, double amp, int kx = 1, int ky = 1) {
  const bool two_d = g->mesh_axes() == 2;
  const double lx = g->domain().extent(0);
  const double ly = two_d ? g->domain().extent(1) : 1.0;
  return Field::sample(g, [=](double x, double y) {
    const double cy = two_d ? std::cos(ky * pi * y / ly) : 1.0;
    return mean * (1.0 + amp * std::cos(kx * pi * x / lx) * cy);
  });
}

// ---------------------------------------------------------------------------

Verdict mass_conservation() {
  struct Case {
    GridPtr grid;
    MotilityPair pair;
    double d;
    Field u0;
  };
  const GridPtr line = build_grid(Domain::interval(1.0), 128);
  const GridPtr square = build_grid(Domain::rectangle(1.0, 1.0), 32, 32);
  const GridPtr disc = build_grid(Domain::disc(1.0), 64);
  std::vector<Case> cases{
      {line, MotilityPair::ks_algebraic(1.0, 1.5, 0.0), 0.5, cosine_ic(line, 2.0, 0.5)},
      {square, MotilityPair::ks_exponential(4.0, 0.0), 1.0, cosine_ic(square, 1.0, 0.5)},
      {disc, MotilityPair::exponential(1.0, 0.5, 2.0), 0.2, cosine_ic(disc, 3.0, 0.4)},
  };
  double worst = 0.0;
  int clipped = 0;
  for (const Case& c : cases) {
    const Evolver ev(c.grid, c.pair, c.d);
    SimState s = ev.initial_state(c.u0);
    const double m = integrate(c.u0);
    for (int k = 0; k < 1000; ++k) {
      s = ev.step(s, ev.stable_dt(s));
      worst = std::max(worst, std::abs(integrate(s.u) - m) / m);
    }
    clipped += s.positivity_clipped_count;
  }
  return {worst <= 1e-10 && clipped == 0,
          fmt("max |int u - m|/m = %.2e over 3 runs x 1000 steps, %d clipping events", worst, clipped)};
}

Verdict elliptic_conservation() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  const std::vector<GridPtr> grids{build_grid(Domain::interval(1.0), 100), build_grid(Domain::rectangle(1.0, 0.5), 40, 20),
                                   build_grid(Domain::disc(1.0), 100)};
  for (const GridPtr& g : grids) {
    const EllipticOperator op(g, 0.1);
    for (int t = 0; t < 100; ++t) {
      const Field u = random_field(g, rng, 0.0, 1.0);
      const double mu = integrate(u);
      worst = std::max(worst, std::abs(integrate(op.solve_v(u)) - mu) / mu);
    }
  }

  // Observed order on the Neumann cosine eigenfunction.
  const double d = 0.1, eps = 0.5;
  double min_order = 1e9, max_order = -1e9;
  auto order_of = [&](auto make_grid, auto exact, auto sample, const std::vector<int>& ns) {
    std::vector<double> errors;
    for (int n : ns) {
      const GridPtr g = make_grid(n);
      const Field v = EllipticOperator(g, d).solve_v(Field::sample(g, sample));
      double err = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const Point p = g->center(i);
        err = std::max(err, std::abs(v[i] - exact(p.x, p.y)));
      }
      errors.push_back(err);
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double q = std::log2(errors[i - 1] / errors[i]);
      min_order = std::min(min_order, q);
      max_order = std::max(max_order, q);
    }
  };
  for (int k : {1, 2}) {
    const double mu = k * k * pi * pi;
    order_of([](int n) { return build_grid(Domain::interval(1.0), n); },
             [&](double x, double) { return 1.0 + eps * std::cos(k * pi * x) / (1.0 + d * mu); },
             [&](double x, double) { return 1.0 + eps * std::cos(k * pi * x); }, {32, 64, 128, 256});
  }
  {
    const double mu = pi * pi + 4.0 * pi * pi;  // cos(pi x) cos(2 pi y) on the unit square
    order_of([](int n) { return build_grid(Domain::rectangle(1.0, 1.0), n, n); },
             [&](double x, double y) { return 1.0 + eps * std::cos(pi * x) * std::cos(2 * pi * y) / (1.0 + d * mu); },
             [&](double x, double y) { return 1.0 + eps * std::cos(pi * x) * std::cos(2 * pi * y); }, {16, 32, 64});
  }
  const bool pass = worst <= 1e-10 && min_order >= 1.9 && max_order <= 2.1;
  return {pass, fmt("max |int v - int u|/int u = %.2e (300 inputs); eigenfunction orders in [%.3f, %.3f]", worst,
                    min_order, max_order)};
}

Verdict signal_positivity() {
  std::mt19937_64 rng(99);
  int violations = 0;
  for (const GridPtr& g : {build_grid(Domain::interval(1.0), 80), build_grid(Domain::rectangle(1.0, 1.0), 20, 20),
                           build_grid(Domain::disc(1.0), 80)}) {
    const EllipticOperator op(g, 0.05);
    for (int t = 0; t < 100; ++t) {
      const Field u = random_field(g, rng, 0.0, 5.0);
      const Field v = op.solve_v(u);
      if (v.min() < u.min() - 1e-12 || v.max() > u.max() + 1e-12) ++violations;
    }
  }

  // Runs from non-negative data that vanishes on part of the domain.
  double min_eta = 1e300;
  auto patchy = [](const GridPtr& g, double x0) {
    return Field::sample(g, [=](double x, double) { return std::max(0.0, std::cos(2.0 * pi * (x - x0))) * 3.0; });
  };
  const GridPtr line = build_grid(Domain::interval(1.0), 64);
  const GridPtr disc = build_grid(Domain::disc(1.0), 64);
  const GridPtr square = build_grid(Domain::rectangle(1.0, 1.0), 24, 24);
  const Field sq0 = Field::sample(square, [](double x, double y) { return x * x + y * y < 0.1 ? 5.0 : 0.0; });
  EvolveConfig cfg;
  cfg.horizon = 0.2;
  cfg.cadence = 0.05;
  std::vector<RunResult> runs;
  runs.push_back(run(patchy(line, 0.0), MotilityPair::ks_exponential(1.0, 0.0), 0.1, cfg));
  runs.push_back(run(patchy(line, 0.3), MotilityPair::algebraic(1.0, 0.5, 1.0, 2.0), 0.1, cfg));
  runs.push_back(run(patchy(disc, 0.0), MotilityPair::exponential(1.0, 1.0, 0.5), 0.1, cfg));
  runs.push_back(run(sq0, MotilityPair::ks_exponential(1.0, 0.5), 0.1, cfg));
  bool nonneg_series = true;
  for (const RunResult& r : runs) {
    min_eta = std::min(min_eta, r.final_state.measured_eta);
    for (const DiagRecord& rec : r.trajectory) nonneg_series = nonneg_series && rec.min_v >= 0.0;
  }
  const bool pass = violations == 0 && min_eta > 0.0 && nonneg_series;
  return {pass, fmt("max-principle violations %d/300; smallest measured eta over 4 runs = %.3e", violations, min_eta)};
}

Verdict dispersion() {
  const GridPtr g = build_grid(Domain::interval(1.0), 128);
  const double ubar = 1.0, d = 1.0, eps = 1e-3;
  struct Family {
    const char* name;
    MotilityPair pair;
  };
  const std::vector<Family> fams{{"ks_exponential(chi=1, alpha=0)", MotilityPair::ks_exponential(1.0, 0.0)},
                                 {"algebraic(1, 8, 1, 2)", MotilityPair::algebraic(1.0, 8.0, 1.0, 2.0)}};
  double worst = 0.0;
  std::ostringstream os;
  for (const Family& f : fams) {
    const Evolver ev(g, f.pair, d);
    // v-bar = u-bar for the constant state.
    const MotilityValues mv = f.pair.eval(ubar);
    for (int k : {1, 2, 3}) {
      const double mu = k * k * pi * pi;
      const double s = -mu * (mv.gamma - ubar * mv.phi / (1.0 + d * mu));
      const double horizon = 1.5 / std::abs(s);
      std::vector<double> ts, logs;
      EvolveConfig cfg;
      cfg.horizon = horizon;
      cfg.cadence = horizon / 30.0;
      cfg.on_sample = [&](const SimState& st, const DiagRecord&) {
        double a = 0.0;
        for (std::size_t i = 0; i < st.u.size(); ++i) {
          a += 2.0 * g->weights()[i] * (st.u[i] - ubar) * std::cos(k * pi * g->center(i).x);
        }
        ts.push_back(st.t);
        logs.push_back(std::log(std::abs(a)));
      };
      run(ev, cosine_ic(g, ubar, eps, k), cfg);
      // Least-squares slope of log amplitude.
      const double n = ts.size();
      double st = 0, sl = 0, stt = 0, stl = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sl += logs[i];
        stt += ts[i] * ts[i];
        stl += ts[i] * logs[i];
      }
      const double measured = (n * stl - st * sl) / (n * stt - st * st);
      const double rel = std::abs(measured - s) / std::abs(s);
      worst = std::max(worst, rel);
      os << fmt(" %s k=%d s=%.4g meas=%.4g;", f.name[0] == 'k' ? "ks_exp" : "alg", k, s, measured);
    }
  }
  return {worst <= 0.1, fmt("worst relative rate error %.2e;", worst) + os.str()};
}

// Criteria 5-7 share one long run.
struct SubcriticalRun {
  RunResult result;
  double m;
  double d;
  double lambda;
  MotilityPair pair;
  double seconds;
};

const SubcriticalRun& subcritical_run() {
  static std::optional<SubcriticalRun> cache;
  if (cache) return *cache;
  const GridPtr g = build_grid(Domain::rectangle(1.0, 1.0), 64, 64);
  const Field u0 = cosine_ic(g, 1.0, 0.3);
  const double m = integrate(u0), d = 1.0;
  const MotilityPair pair = MotilityPair::ks_exponential(0.5 * 4.0 * pi * d / m, 0.5);
  EvolveConfig cfg;
  cfg.horizon = 50.0;
  cfg.cadence = 0.25;
  cfg.p = 2.0;
  cfg.lambda = 0.9 * 4.0 * pi * d / m;
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result = run(u0, pair, d, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  cache.emplace(SubcriticalRun{std::move(result), m, d, *cfg.lambda, pair, secs});
  return *cache;
}

Verdict subcritical_boundedness() {
  const SubcriticalRun& r = subcritical_run();
  const auto& traj = r.result.trajectory;
  const double transient = 5.0;
  double lo = 1e300, hi = 0.0;
  for (const DiagRecord& rec : traj) {
    if (rec.t < transient) continue;
    lo = std::min(lo, rec.linf_u);
    hi = std::max(hi, rec.linf_u);
  }
  const bool completed = r.result.outcome.kind == Outcome::Kind::completed;
  const bool pass = completed && traj.back().t >= 50.0 - 1e-9 && hi / lo <= 2.0;
  return {pass, fmt("%s to t=%.1f in %ld steps (%.1f s); linf_u max/min for t>=%.0f = %.4f", completed ? "completed" : "flagged",
                    traj.back().t, r.result.steps, r.seconds, transient, hi / lo)};
}

Verdict exp_moment_monitor() {
  const SubcriticalRun& r = subcritical_run();
  double lo = 1e300, hi = 0.0;
  for (const DiagRecord& rec : r.result.trajectory) {
    lo = std::min(lo, rec.exp_moment);
    hi = std::max(hi, rec.exp_moment);
  }
  return {std::isfinite(hi) && hi / lo <= 10.0,
          fmt("Lambda = 0.9*4*pi*d/m = %.4f; exp_moment max/min = %.4f", r.lambda, hi / lo)};
}

Verdict lp_monitor() {
  const SubcriticalRun& r = subcritical_run();
  const HypothesisReport rep =
      check_hypotheses(r.pair, 2, r.result.final_state.measured_eta, r.d, r.m, EtaMode::measured);
  if (!rep.admissible_p.nonempty) return {false, "admissible p range is empty"};
  const double p = 2.0;
  if (!rep.admissible_p.contains(p)) {
    return {false, fmt("p = %g outside admissible (%g, %g]", p, rep.admissible_p.lower, rep.admissible_p.upper)};
  }
  const PeiReport pei = monitor_pei(r.result.trajectory, p, rep.admissible_p);
  const bool in_range = pei.c0 >= 0.0 && pei.c1 >= 0.0 && pei.c0 <= 1e6 && pei.c1 <= 1e6;
  // Independent coverage check of the returned constants.
  bool covers = true;
  for (std::size_t k = 0; k < pei.lhs.size(); ++k) {
    covers = covers && pei.lhs[k] <= pei.c0 + pei.c1 * pei.basis[k] + 1e-9 * (1.0 + std::abs(pei.lhs[k]));
  }
  return {pei.fit_ok && in_range && covers && pei.p_admissible,
          fmt("p = %g in (%g, %g]; c0 = %.4g, c1 = %.4g over %zu samples", p, rep.admissible_p.lower,
              rep.admissible_p.upper, pei.c0, pei.c1, pei.lhs.size())};
}

Verdict hypothesis_fidelity() {
  int mismatches = 0;
  std::ostringstream why;
  auto expect = [&](bool got, bool want, const std::string& what) {
    if (got != want) {
      ++mismatches;
      why << " " << what;
    }
  };

  // Worked examples.
  expect(check_hypotheses(MotilityPair::algebraic(1, 1, 1, 2), 2, 1.0, 1.0, 1.0).thm22_con1.pass, true, "alg-example");
  expect(check_hypotheses(MotilityPair::exponential(1, 1, 0.5), 2, 1.0, 1.0, 4.0).thm22_con2.pass, true, "exp-example");
  expect(check_hypotheses(MotilityPair::ks_algebraic(1, 2.5, 0), 3, 1.0, 1.0, 1.0).thm23_i.pass, false, "ks-2.5");
  expect(check_hypotheses(MotilityPair::ks_algebraic(1, 1.5, 0), 3, 1.0, 1.0, 1.0).thm23_i.pass, true, "ks-1.5");

  // Randomized sets against direct evaluation of the inequalities.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  std::uniform_int_distribution<int> N(2, 4);
  int sets = 0;
  for (int i = 0; i < 5; ++i, ++sets) {
    const double s1 = U(rng), s2 = U(rng), l1 = U(rng), l2 = 1.0 + U(rng), eta = U(rng);
    const int n = N(rng);
    const bool want = l2 >= l1 + 1.0 && std::min(l2 / (l2 - 1.0), s1 * l2 / s2 * std::pow(eta, l2 - l1 - 1.0)) > n / 2.0;
    expect(check_hypotheses(MotilityPair::algebraic(s1, s2, l1, l2), n, eta, 1.0, 1.0).thm22_con1.pass, want, "alg");
  }
  for (int i = 0; i < 5; ++i, ++sets) {
    const double c1 = U(rng), c2 = U(rng), delta = U(rng), eta = U(rng), d = U(rng), m = U(rng);
    const bool want = c2 >= c1 && delta * std::exp((c1 - c2) * eta) < c2 && c2 < 4.0 * pi * d / m;
    expect(check_hypotheses(MotilityPair::exponential(c1, c2, delta), 2, eta, d, m).thm22_con2.pass, want, "exp");
  }
  std::uniform_real_distribution<double> A(-2.0, 0.95);
  for (int i = 0; i < 5; ++i, ++sets) {
    const double lambda = U(rng), alpha = A(rng);
    const int n = N(rng);
    const double bound = alpha >= 0.0 ? (n > 2 ? 2.0 / (n - 2) : INFINITY) : 2.0 / (n * (1.0 - alpha) - 2.0);
    const bool want = lambda < bound;
    expect(check_hypotheses(MotilityPair::ks_algebraic(1.0, lambda, alpha), n, 1.0, 1.0, 1.0).thm23_i.pass, want, "ksa");
  }
  for (int i = 0; i < 5; ++i, ++sets) {
    const double chi = U(rng), alpha = A(rng), d = U(rng), m = U(rng);
    const bool want = chi < 4.0 * pi * d / m && alpha > 0.0 && alpha < 1.0;
    expect(check_hypotheses(MotilityPair::ks_exponential(chi, alpha), 2, 1.0, d, m).thm23_ii.pass, want, "kse");
  }

  // H3 pass/fail against a sampled infimum computed from eval values, for
  // sets whose margin exceeds the sampling resolution.
  int h3_checked = 0;
  for (int i = 0; i < 20; ++i) {
    const double s1 = U(rng), s2 = U(rng), l1 = U(rng), l2 = 1.0 + U(rng), eta = U(rng);
    const MotilityPair p = MotilityPair::algebraic(s1, s2, l1, l2);
    auto functional = [&](double v) {
      const MotilityValues mv = p.eval(v);
      return mv.gamma * std::abs(mv.dphi) / (mv.phi * mv.phi);
    };
    double inf = 1e300;
    for (double v = eta; v <= 1e4; v *= 1.01) inf = std::min(inf, functional(v));
    // A functional still decaying as a power at the window end has infimum 0.
    const double tail_slope = std::log(functional(1e4) / functional(1e3)) / std::log(10.0);
    if (tail_slope < -1e-3) inf = 0.0;
    if (std::abs(inf - 1.0) < 0.05 || std::abs(tail_slope) <= 1e-3) continue;
    ++h3_checked;
    expect(check_hypotheses(p, 2, eta, 1.0, 1.0).h3.pass, inf > 1.0, "h3");
  }
  return {mismatches == 0, fmt("4 worked examples + %d randomized sets + %d H3 samples; %d mismatches", sets, h3_checked,
                               mismatches) + why.str()};
}

Verdict scaling_construction() {
  const GridPtr g = build_grid(Domain::interval(1.0), 200);
  double worst_res = 0.0, worst_identity = 0.0, worst_mass = 0.0, worst_profile = 0.0;
  int converged = 0;
  struct Combo {
    double k, d_frac, m;
  };
  const std::vector<Combo> combos{{1.5, 0.8, 0.5}, {1.5, 0.6, 2.0}, {1.5, 0.5, 7.0}, {2.0, 0.7, 0.5}, {2.0, 0.5, 3.0},
                                  {2.0, 0.3, 10.0}, {3.0, 0.8, 0.2}, {3.0, 0.5, 1.5}, {3.0, 0.25, 6.0}};
  for (const Combo& c : combos) {
    const double d = c.d_frac * (c.k - 1.0) / (pi * pi);
    const NewtonResult local = solve_local_newton(c.k, d, perturbed_constant_guess(g, 1.0));
    const Field& w = local.solution;
    if (local.residual > 1e-10 || w.max() / w.min() < 1.0 + 1e-3) continue;
    ++converged;
    const SteadySolution s = rescale_to_nonlocal(w, c.k, d, c.m);

    // Oracle: nonlocal residual and both identity sides from the raw fields.
    const double m0 = weighted_sum(w);
    const Field V = (c.m / m0) * w;
    const double intVk = weighted_sum(V, c.k);
    std::vector<double> lap(g->size());
    div_grad(*g, V.values(), lap);
    double res = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) {
      const double f = d * lap[i] - V[i] + c.m / intVk * std::pow(V[i], c.k);
      res += g->weights()[i] * f * f;
    }
    res = std::sqrt(res);
    const double lhs = std::pow(m0 / c.m, c.k - 1.0);
    const double rhs = c.m / intVk;
    worst_res = std::max(worst_res, res);
    worst_identity = std::max(worst_identity, std::abs(lhs - rhs) / std::abs(rhs));
    worst_mass = std::max(worst_mass, std::abs(integrate(s.u) - c.m) / c.m);
    worst_profile = std::max(worst_profile, rel_linf(s.v, V));
  }
  const bool pass = converged == 9 && worst_res <= 1e-9 && worst_identity <= 1e-8 && worst_mass <= 1e-8 &&
                    worst_profile <= 1e-12;
  return {pass, fmt("%d/9 spikes; max nonlocal residual %.2e, identity rel. error %.2e, mass error %.2e", converged,
                    worst_res, worst_identity, worst_mass)};
}

Verdict bifurcation_in_d() {
  const GridPtr g = build_grid(Domain::interval(1.0), 200);
  std::vector<double> ds;
  for (int i = 0; i < 14; ++i) ds.push_back(0.15 - 0.01 * i);
  const ContinuationResult k2 = continuation(SteadyProblem::algebraic(g, 2.0, 0.1, 1.0), ContinuationParameter::d, ds);
  bool ok2 = false;
  std::string where = "no crossing";
  if (k2.threshold_interval) {
    const auto [a, b] = *k2.threshold_interval;
    const double lo = std::min(a, b), hi = std::max(a, b);
    ok2 = lo >= 0.09 - 1e-12 && hi <= 0.11 + 1e-12 && *k2.threshold_estimate >= 0.09 && *k2.threshold_estimate <= 0.11;
    where = fmt("crossing in [%.3f, %.3f], estimate %.5f (linearization %.5f)", lo, hi, *k2.threshold_estimate, 1.0 / (pi * pi));
  }

  std::vector<double> flat_ds;
  for (int i = 0; i <= 48; ++i) flat_ds.push_back(0.5 - 0.01 * i);
  const ContinuationResult k08 =
      continuation(SteadyProblem::algebraic(g, 0.8, 0.1, 1.0), ContinuationParameter::d, flat_ds);
  double dev = 0.0;
  for (const BranchPoint& p : k08.points) dev = std::max(dev, std::abs(p.amplitude - 1.0));
  const bool ok08 = dev <= 1e-6 && k08.points.size() == flat_ds.size();
  return {ok2 && ok08, "k=2: " + where + fmt("; k=0.8: max |amplitude - 1| = %.1e over d in [0.02, 0.5]", dev)};
}

Verdict radial_threshold() {
  const double crit = 8.0 * pi;
  std::vector<double> values;
  for (int i = 0; i <= 40; ++i) values.push_back(crit * (0.8 + 0.01 * i));
  std::vector<double> distance;
  std::ostringstream os;
  bool within = true;
  for (int n : {50, 100, 200}) {
    const GridPtr disc = build_grid(Domain::disc(1.0), n);
    const ContinuationResult r =
        continuation(SteadyProblem::exponential(disc, values.front(), 1.0), ContinuationParameter::m_tilde, values);
    if (!r.threshold_estimate) {
      within = false;
      os << fmt(" n=%d: no crossing;", n);
      continue;
    }
    const double ratio = *r.threshold_estimate / crit;
    within = within && std::abs(ratio - 1.0) <= 0.1;
    distance.push_back(std::abs(ratio - 1.0));
    os << fmt(" n=%d: %.4f;", n, ratio);
  }
  bool tightening = distance.size() == 3;
  for (std::size_t i = 1; i < distance.size(); ++i) tightening = tightening && distance[i] <= distance[i - 1];
  return {within && tightening, "crossing / (8 pi d):" + os.str() + (tightening ? " tightening" : " not tightening")};
}

Verdict cross_validation() {
  const GridPtr g = build_grid(Domain::interval(1.0), 64);
  EvolveConfig cfg;
  cfg.flux_scheme = FluxScheme::scharfetter_gummel;
  cfg.cadence = 1.0;

  // Algebraic: ks_algebraic(sigma = 1, lambda = 2, alpha = 0), k = 2.
  const double d_alg = 0.07, m_alg = 1.0;
  const SteadySolution s_alg = solve_steady(SteadyProblem::algebraic(g, 2.0, d_alg, m_alg), perturbed_constant_guess(g, 1.0));
  cfg.horizon = 6.0;
  const RunResult r_alg = run(cosine_ic(g, m_alg, 0.3), MotilityPair::ks_algebraic(1.0, 2.0, 0.0), d_alg, cfg);
  const double e_alg = rel_linf(r_alg.final_state.u, s_alg.u);

  // Exponential: ks_exponential(chi = 1, alpha = 0), m_tilde = chi (1 - alpha) m.
  const double d_exp = 0.1, m_exp = 2.5;
  const SteadySolution s_exp = solve_nonlocal_exponential(m_exp, d_exp, perturbed_constant_guess(g, m_exp), 1.0);
  cfg.horizon = 60.0;
  const RunResult r_exp = run(cosine_ic(g, m_exp, 0.3), MotilityPair::ks_exponential(1.0, 0.0), d_exp, cfg);
  const double e_exp = rel_linf(r_exp.final_state.u, s_exp.u);

  const bool nontrivial = !s_alg.is_constant && !s_exp.is_constant;
  const bool pass = nontrivial && e_alg <= 1e-3 && e_exp <= 1e-3 &&
                    r_alg.outcome.kind == Outcome::Kind::completed && r_exp.outcome.kind == Outcome::Kind::completed;
  return {pass, fmt("algebraic (amplitude %.3f) rel. Linf %.2e at t=%.0f; exponential (amplitude %.3f) %.2e at t=%.0f",
                    s_alg.amplitude, e_alg, r_alg.final_state.t, s_exp.amplitude, e_exp, r_exp.final_state.t)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "mass conservation", mass_conservation},
      {2, "elliptic conservation and eigenfunction order", elliptic_conservation},
      {3, "signal positivity", signal_positivity},
      {4, "dispersion relation", dispersion},
      {5, "subcritical boundedness", subcritical_boundedness},
      {6, "exponential-moment monitor", exp_moment_monitor},
      {7, "L^p inequality monitor", lp_monitor},
      {8, "hypothesis-checker fidelity", hypothesis_fidelity},
      {9, "scaling construction", scaling_construction},
      {10, "bifurcation in d", bifurcation_in_d},
      {11, "radial mass threshold", radial_threshold},
      {12, "evolution/steady cross-validation", cross_validation},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s %2d %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
