#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kslab/grid.hpp"

namespace kslab {

/// A steady state of the evolution system with u = theta * gamma(v)^beta.
struct SteadySolution {
  Field v;
  Field u;
  double theta = 0.0;
  /// Volume-weighted 2-norm of the discrete nonlocal equation.
  double residual = 0.0;
  bool is_constant = true;
  /// max v / min v.
  double amplitude = 1.0;
  int newton_iterations = 0;
  /// Largest |ln u_i - ln u_j| over neighbouring cells; measures how well the
  /// grid resolves the profile.
  double max_log_jump = 0.0;
};

/// Largest jump of ln f across interior faces; f must be positive.
double max_log_jump(const Field& f);

/// Deflation of the constant solution, M(x) = 1/||x - c||^2 + shift, keeps
/// Newton from returning to it.
///  - off / on: as named.
///  - automatic: a non-constant guess is first tried deflated, then plain;
///    a constant guess runs plain.
enum class Deflation { off, on, automatic };

struct NewtonOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  int max_halvings = 30;
  Deflation deflation = Deflation::automatic;
  double deflation_shift = 1.0;
};

struct NewtonResult {
  Field solution;
  int iterations = 0;
  double residual = 0.0;
};

/// d*Lap(w) - w + w^k with zero-flux boundaries (per-volume form).
std::vector<double> local_residual(double k, double d, const Field& w);

/// Newton for  d Lap w - w + w^k = 0; iterates stay positive via step
/// halving. Throws ConvergenceError after max_iterations or max_halvings.
/// k = 1 is rejected: every constant is then a solution.
NewtonResult solve_local_newton(double k, double d, const Field& guess, const NewtonOptions& options = {});
Field solve_local(double k, double d, const Field& guess, const NewtonOptions& options = {});

/// Residual of  d Lap V - V + (m / int V^k) V^k.
double nonlocal_algebraic_residual(const Field& v, double k, double d, double m);

/// V = (m/m0) w with m0 = int w; u = m V^k / int V^k. V then solves
/// d Lap V - V + (m0/m)^(k-1) V^k = 0. Throws std::runtime_error when the
/// identity (m0/m)^(k-1) = m / int V^k fails beyond 1e-8
/// relative or the nonlocal residual exceeds 1e-9. k = 1 is rejected.
SteadySolution rescale_to_nonlocal(const Field& w, double k, double d, double m);

/// Residual of  d Lap vt - vt + (mt / int e^vt) e^vt.
double nonlocal_exponential_residual(const Field& vt, double m_tilde, double d);

/// Newton on the exponential nonlocal problem in the scaled variable
/// vt = chi_eff * v, chi_eff = chi (1 - alpha). The dense rank-one part of the
/// Jacobian is handled by Sherman-Morrison. The returned solution is mapped
/// back to v = vt / chi_eff, with mass m = m_tilde / chi_eff.
SteadySolution solve_nonlocal_exponential(double m_tilde, double d, const Field& guess, double chi_eff = 1.0,
                                          const NewtonOptions& options = {});
NewtonResult solve_nonlocal_exponential_newton(double m_tilde, double d, const Field& guess,
                                               const NewtonOptions& options = {});

/// Lowest non-constant Neumann eigenfunction, scaled to max |psi| = 1:
/// cos(pi x/L), cos along the longer rectangle side, or J0(j'_{1,1} r/R).
Field first_neumann_mode(const GridPtr& grid);
/// c * (1 + 0.3 * psi).
Field perturbed_constant_guess(const GridPtr& grid, double c);
/// c * (1 + sum of four low cosine modes with amplitudes in [-0.2, 0.2]).
Field random_positive_guess(const GridPtr& grid, double c, std::uint64_t seed);

enum class SteadyKind { algebraic, exponential };

struct SteadyProblem {
  SteadyKind kind = SteadyKind::algebraic;
  GridPtr grid;
  double d = 1.0;
  /// Target cell mass (algebraic kind).
  double m = 1.0;
  /// k = (1 - alpha) lambda (algebraic kind).
  double k = 2.0;
  /// m_tilde = chi (1 - alpha) m (exponential kind).
  double m_tilde = 1.0;
  double chi_eff = 1.0;

  static SteadyProblem algebraic(GridPtr grid, double k, double d, double m);
  static SteadyProblem exponential(GridPtr grid, double m_tilde, double d, double chi_eff = 1.0);
};

/// Solves at one parameter set, from the given guess (in solver variables:
/// w for the algebraic kind, vt for the exponential kind).
SteadySolution solve_steady(const SteadyProblem& problem, const Field& guess, const NewtonOptions& options = {});

enum class ContinuationParameter { d, m_tilde };
enum class ConvergedFrom { constant_guess, perturbed_guess, previous_branch_point };
std::string to_string(ConvergedFrom from);

struct BranchPoint {
  double parameter = 0.0;
  double amplitude = 1.0;
  double residual = 0.0;
  ConvergedFrom converged_from = ConvergedFrom::constant_guess;
  double max_v = 0.0;
  double min_v = 0.0;
  double theta = 0.0;
  std::optional<SteadySolution> solution;
};

struct ContinuationOptions {
  NewtonOptions newton;
  /// Amplitude above which a point counts as non-constant.
  double amplitude_threshold = 1.0 + 1e-3;
  /// Re-march backwards from non-constant points into constant ones.
  bool backward_pass = true;
  /// Non-constant solutions with a larger max_log_jump are concentrated at
  /// grid scale (an unresolved blowup profile); they end the branch instead
  /// of being recorded.
  double max_log_jump = 0.5;
};

struct ContinuationResult {
  std::vector<BranchPoint> points;
  /// Parameter interval (sorted) where the amplitude crosses the threshold.
  std::optional<std::pair<double, double>> threshold_interval;
  /// Square-root-law extrapolation of the crossing when available, else the
  /// interval midpoint.
  std::optional<double> threshold_estimate;
  std::vector<std::string> terminations;
};

/// Marches the parameter through `values`, reusing converged non-constant
/// solutions as guesses. Each point tries, in order: the previous non-constant
/// solution, the perturbed constant with the constant deflated, the constant.
ContinuationResult continuation(const SteadyProblem& problem, ContinuationParameter parameter,
                                std::span<const double> values, const ContinuationOptions& options = {});

/// `parameter,amplitude,residual,max_v,min_v,theta`.
void write_branch_csv(std::ostream& os, const ContinuationResult& result);

}  // namespace kslab
