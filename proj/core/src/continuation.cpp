#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "kslab/errors.hpp"
#include "kslab/steady.hpp"

namespace kslab {
namespace {

double domain_size(const Grid& g) {
  double s = 0.0;
  for (double w : g.weights()) s += w;
  return s;
}

// Solution plus the Newton unknown it came from (w or vt), used as the next guess.
struct Solved {
  SteadySolution solution;
  Field state;
};

Solved solve_point(const SteadyProblem& p, const Field& guess, const NewtonOptions& opt) {
  if (p.kind == SteadyKind::exponential) {
    SteadySolution s = solve_nonlocal_exponential(p.m_tilde, p.d, guess, p.chi_eff, opt);
    Field state = s.v * p.chi_eff;
    return {std::move(s), std::move(state)};
  }
  NewtonResult r = solve_local_newton(p.k, p.d, guess, opt);
  NewtonOptions settled = opt;
  settled.deflation = Deflation::off;
  SteadySolution s = solve_steady(p, r.solution, settled);
  s.newton_iterations = r.iterations;
  return {std::move(s), std::move(r.solution)};
}

double constant_state(const SteadyProblem& p) {
  return p.kind == SteadyKind::exponential ? p.m_tilde / domain_size(*p.grid) : 1.0;
}

BranchPoint make_point(double parameter, const SteadySolution& s, ConvergedFrom from) {
  BranchPoint b;
  b.parameter = parameter;
  b.amplitude = s.amplitude;
  b.residual = s.residual;
  b.converged_from = from;
  b.max_v = s.v.max();
  b.min_v = s.v.min();
  b.theta = s.theta;
  b.solution = s;
  return b;
}

SteadyProblem at(const SteadyProblem& base, ContinuationParameter parameter, double value) {
  if (parameter == ContinuationParameter::d) {
    return base.kind == SteadyKind::exponential ? SteadyProblem::exponential(base.grid, base.m_tilde, value, base.chi_eff)
                                                : SteadyProblem::algebraic(base.grid, base.k, value, base.m);
  }
  if (base.kind != SteadyKind::exponential) {
    throw std::invalid_argument("continuation in m_tilde needs the exponential kind");
  }
  return SteadyProblem::exponential(base.grid, value, base.d, base.chi_eff);
}

}  // namespace

std::string to_string(ConvergedFrom from) {
  switch (from) {
    case ConvergedFrom::constant_guess: return "constant_guess";
    case ConvergedFrom::perturbed_guess: return "perturbed_guess";
    case ConvergedFrom::previous_branch_point: return "previous_branch_point";
  }
  return "unknown";
}

ContinuationResult continuation(const SteadyProblem& problem, ContinuationParameter parameter,
                                std::span<const double> values, const ContinuationOptions& options) {
  if (values.empty()) throw std::invalid_argument("continuation needs at least one parameter value");
  ContinuationResult result;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if ((values[i] - values[i - 1]) * (values[1] - values[0]) <= 0.0) {
      throw std::invalid_argument("continuation parameter values must be strictly monotone");
    }
  }
  const double cutoff = options.amplitude_threshold;
  // Non-constant and resolved; unresolved profiles are logged as the end of the branch.
  const auto accept = [&](const Solved& s, double value) {
    if (s.solution.amplitude <= cutoff) return false;
    if (s.solution.max_log_jump > options.max_log_jump) {
      result.terminations.push_back("unresolved concentrated profile at " + std::to_string(value) +
                                    " (max ln-u jump " + std::to_string(s.solution.max_log_jump) + ")");
      return false;
    }
    return true;
  };
  NewtonOptions plain = options.newton;
  plain.deflation = Deflation::off;
  NewtonOptions deflated = options.newton;
  deflated.deflation = Deflation::on;

  std::vector<std::optional<Field>> states(values.size());
  std::optional<Field> previous;

  for (std::size_t idx = 0; idx < values.size(); ++idx) {
    const double value = values[idx];
    const SteadyProblem p = at(problem, parameter, value);
    const double c = constant_state(p);
    std::optional<Solved> got;
    ConvergedFrom from = ConvergedFrom::constant_guess;

    if (previous) {
      try {
        Solved s = solve_point(p, *previous, plain);
        if (accept(s, value)) {
          got = std::move(s);
          from = ConvergedFrom::previous_branch_point;
        }
      } catch (const std::exception& e) {
        result.terminations.push_back("branch from previous point ended at " + std::to_string(value) + ": " +
                                      e.what());
      }
    }
    if (!got) {
      try {
        Solved s = solve_point(p, perturbed_constant_guess(p.grid, c), deflated);
        if (accept(s, value)) {
          got = std::move(s);
          from = ConvergedFrom::perturbed_guess;
        }
      } catch (const std::exception&) {
        // No non-constant solution reachable from the perturbed guess.
      }
    }
    if (!got) {
      got = solve_point(p, Field::constant(p.grid, c), plain);
      from = ConvergedFrom::constant_guess;
    }
    if (got->solution.amplitude > cutoff) {
      previous = got->state;
    } else {
      previous.reset();
    }
    states[idx] = got->state;
    result.points.push_back(make_point(value, got->solution, from));
  }

  if (options.backward_pass && values.size() > 1) {
    for (std::size_t idx = values.size() - 1; idx-- > 0;) {
      BranchPoint& here = result.points[idx];
      const BranchPoint& next = result.points[idx + 1];
      if (here.amplitude > cutoff || next.amplitude <= cutoff) continue;
      try {
        const SteadyProblem p = at(problem, parameter, values[idx]);
        Solved s = solve_point(p, *states[idx + 1], plain);
        if (accept(s, values[idx])) {
          states[idx] = s.state;
          here = make_point(values[idx], s.solution, ConvergedFrom::previous_branch_point);
        }
      } catch (const std::exception& e) {
        result.terminations.push_back("backward branch ended at " + std::to_string(values[idx]) + ": " + e.what());
      }
    }
  }

  const auto& pts = result.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const bool a = pts[i].amplitude > cutoff;
    const bool b = pts[i + 1].amplitude > cutoff;
    if (a == b) continue;
    const double lo = std::min(pts[i].parameter, pts[i + 1].parameter);
    const double hi = std::max(pts[i].parameter, pts[i + 1].parameter);
    result.threshold_interval = std::make_pair(lo, hi);
    result.threshold_estimate = 0.5 * (lo + hi);
    // Square-root law near a pitchfork: (amplitude - 1)^2 is affine in the
    // parameter. Use the two non-constant points closest to the crossing.
    const std::size_t first = b ? i + 1 : i;
    const int dir = b ? 1 : -1;
    const auto second = static_cast<std::ptrdiff_t>(first) + dir;
    if (second >= 0 && second < static_cast<std::ptrdiff_t>(pts.size()) && pts[second].amplitude > cutoff) {
      const double y1 = std::pow(pts[first].amplitude - 1.0, 2);
      const double y2 = std::pow(pts[second].amplitude - 1.0, 2);
      const double x1 = pts[first].parameter;
      const double x2 = pts[second].parameter;
      if (y1 != y2) {
        const double root = x1 - y1 * (x2 - x1) / (y2 - y1);
        if (std::isfinite(root) && root >= lo && root <= hi) result.threshold_estimate = root;
      }
    }
    break;
  }
  return result;
}

void write_branch_csv(std::ostream& os, const ContinuationResult& result) {
  const auto old_precision = os.precision(17);
  os << "parameter,amplitude,residual,max_v,min_v,theta\n";
  for (const auto& p : result.points) {
    os << p.parameter << ',' << p.amplitude << ',' << p.residual << ',' << p.max_v << ',' << p.min_v << ','
       << p.theta << '\n';
  }
  os.precision(old_precision);
}

}  // namespace kslab
