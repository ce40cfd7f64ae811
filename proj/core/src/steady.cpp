#include "kslab/steady.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "kslab/errors.hpp"

namespace kslab {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// d * Lap - I, with every diagonal entry present so it can be updated in place.
SpMat shifted_laplacian(const Grid& g, double d) {
  std::vector<Eigen::Triplet<double>> entries;
  const auto w = g.weights();
  const auto link = [&](std::size_t a, std::size_t b, double t) {
    if (t == 0.0) return;
    entries.emplace_back(a, a, -d * t / w[a]);
    entries.emplace_back(a, b, d * t / w[a]);
    entries.emplace_back(b, b, -d * t / w[b]);
    entries.emplace_back(b, a, d * t / w[b]);
  };
  const auto tx = g.transmissibility_x();
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 1; i < g.nx(); ++i) {
      link(g.index(i - 1, j), g.index(i, j), tx[static_cast<std::size_t>(j) * (g.nx() + 1) + i]);
    }
  }
  const auto ty = g.transmissibility_y();
  if (!ty.empty()) {
    for (int j = 1; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        link(g.index(i, j - 1), g.index(i, j), ty[static_cast<std::size_t>(j) * g.nx() + i]);
      }
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i) entries.emplace_back(i, i, -1.0);
  const auto n = static_cast<Eigen::Index>(g.size());
  SpMat m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

double weighted_norm(const Grid& g, const Vec& r) {
  const auto w = g.weights();
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += w[i] * r[i] * r[i];
  return std::sqrt(s);
}

// d * Lap x - x in flux-difference form, which is exact on constants.
Vec diffusion_minus_identity(const Grid& g, double d, const Vec& x) {
  Vec out(x.size());
  div_grad(g, {x.data(), static_cast<std::size_t>(x.size())}, {out.data(), static_cast<std::size_t>(out.size())});
  return d * out - x;
}

std::vector<double> to_std(const Vec& x) { return {x.data(), x.data() + x.size()}; }

Vec to_vec(std::span<const double> x) {
  Vec out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out[static_cast<Eigen::Index>(i)] = x[i];
  return out;
}

struct NonlinearSystem {
  // Writes F(x); returns false when x is outside the admissible set.
  std::function<bool(const Vec&, Vec&)> residual;
  // Returns J(x)^{-1} rhs.
  std::function<Vec(const Vec&, const Vec&)> solve_jacobian;
};

// Newton with step halving, optionally deflating the known constant solution c with
// M(x) = 1/||x - c||^2 + shift.
NewtonResult newton_pass(const GridPtr& grid, const NonlinearSystem& sys, Vec x, const NewtonOptions& opt,
                         const Vec* constant) {
  const Grid& g = *grid;
  const auto w = g.weights();
  Vec f(x.size());
  if (!sys.residual(x, f)) throw ConvergenceError("Newton guess is outside the admissible set");
  double norm = weighted_norm(g, f);

  const auto deflation = [&](const Vec& y, double& q) {
    q = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double e = y[i] - (*constant)[i];
      q += w[i] * e * e;
    }
    return 1.0 / q + opt.deflation_shift;
  };
  const bool deflate = opt.deflation == Deflation::on && constant != nullptr;

  for (int it = 0; it <= opt.max_iterations; ++it) {
    if (norm <= opt.tolerance) {
      if (deflate) {
        double q = 0.0;
        deflation(x, q);
        if (q < 1e-12 * std::max(1.0, constant->squaredNorm())) {
          throw ConvergenceError("deflated Newton returned to the constant solution");
        }
      }
      return {Field(grid, to_std(x)), it, norm};
    }
    if (it == opt.max_iterations) break;

    Vec step = sys.solve_jacobian(x, -f);
    if (!step.allFinite()) throw ConvergenceError("Newton step is not finite");
    double merit = norm;
    if (deflate) {
      double q = 0.0;
      const double m = deflation(x, q);
      double grad_dot = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        grad_dot += -2.0 * w[i] * (x[i] - (*constant)[i]) / (q * q) * step[i];
      }
      const double denom = 1.0 - grad_dot / m;
      if (std::abs(denom) > 1e-14) step /= denom;
      merit = m * norm;
    }

    double lambda = 1.0;
    bool accepted = false;
    Vec trial(x.size());
    Vec f_trial(x.size());
    for (int h = 0; h <= opt.max_halvings; ++h) {
      trial = x + lambda * step;
      if (sys.residual(trial, f_trial)) {
        const double n_trial = weighted_norm(g, f_trial);
        double merit_trial = n_trial;
        if (deflate) {
          double q = 0.0;
          merit_trial = deflation(trial, q) * n_trial;
        }
        // Deflated passes take full steps: the deflated merit has spurious
        // local minima that stall a decrease test.
        if (std::isfinite(n_trial) && (deflate || merit_trial < merit || n_trial <= opt.tolerance)) {
          x = trial;
          f = f_trial;
          norm = n_trial;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      throw ConvergenceError("Newton line search failed after " + std::to_string(opt.max_halvings) +
                             " halvings (residual " + std::to_string(norm) + ")");
    }
  }
  throw ConvergenceError("Newton did not converge in " + std::to_string(opt.max_iterations) +
                         " iterations (residual " + std::to_string(norm) + ")");
}

bool near_constant(std::span<const double> v);

NewtonResult newton(const GridPtr& grid, const NonlinearSystem& sys, const Vec& x, const NewtonOptions& opt,
                    const Vec& constant) {
  if (opt.deflation != Deflation::automatic) return newton_pass(grid, sys, x, opt, &constant);
  NewtonOptions plain = opt;
  plain.deflation = Deflation::off;
  if (near_constant({x.data(), static_cast<std::size_t>(x.size())})) return newton_pass(grid, sys, x, plain, &constant);
  NewtonOptions deflated = opt;
  deflated.deflation = Deflation::on;
  try {
    return newton_pass(grid, sys, x, deflated, &constant);
  } catch (const ConvergenceError&) {
    return newton_pass(grid, sys, x, plain, &constant);
  }
}

Vec sparse_solve(Eigen::SparseLU<SpMat>& lu, bool& analysed, const SpMat& j, const Vec& rhs) {
  if (!analysed) {
    lu.analyzePattern(j);
    analysed = true;
  }
  lu.factorize(j);
  if (lu.info() != Eigen::Success) throw ConvergenceError("singular Newton Jacobian");
  return lu.solve(rhs);
}

bool near_constant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return *hi - *lo < 1e-6 * std::abs(mean);
}

double domain_size(const Grid& g) {
  double s = 0.0;
  for (double w : g.weights()) s += w;
  return s;
}

}  // namespace

double max_log_jump(const Field& f) {
  const Grid& g = f.grid();
  double out = 0.0;
  const auto jump = [&](std::size_t a, std::size_t b) {
    out = std::max(out, std::abs(std::log(f[a]) - std::log(f[b])));
  };
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 1; i < g.nx(); ++i) jump(g.index(i - 1, j), g.index(i, j));
  }
  if (g.mesh_axes() == 2) {
    for (int j = 1; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) jump(g.index(i, j - 1), g.index(i, j));
    }
  }
  return out;
}

std::vector<double> local_residual(double k, double d, const Field& w) {
  std::vector<double> r(w.size());
  div_grad(w.grid(), w.values(), r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d * r[i] - w[i] + std::pow(w[i], k);
  return r;
}

NewtonResult solve_local_newton(double k, double d, const Field& guess, const NewtonOptions& options) {
  if (!(k > 0.0)) throw std::invalid_argument("solve_local: k must be positive");
  // At k = 1 the equation is d Lap w = 0 and every constant solves it.
  if (k == 1.0) throw std::invalid_argument("solve_local: k = 1 has no isolated solution");
  if (!(d > 0.0)) throw std::invalid_argument("solve_local: d must be positive");
  if (guess.min() <= 0.0) throw std::invalid_argument("solve_local: guess must be positive");
  const GridPtr& grid = guess.grid_ptr();
  const Grid& g = *grid;
  const SpMat base = shifted_laplacian(g, d);
  Eigen::SparseLU<SpMat> lu;
  bool analysed = false;

  NonlinearSystem sys;
  sys.residual = [&](const Vec& x, Vec& f) {
    if (x.minCoeff() <= 0.0 || !x.allFinite()) return false;
    f = diffusion_minus_identity(g, d, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) f[i] += std::pow(x[i], k);
    return f.allFinite();
  };
  sys.solve_jacobian = [&](const Vec& x, const Vec& rhs) {
    SpMat j = base;
    for (Eigen::Index i = 0; i < x.size(); ++i) j.coeffRef(i, i) += k * std::pow(x[i], k - 1.0);
    return sparse_solve(lu, analysed, j, rhs);
  };
  const Vec one = Vec::Ones(static_cast<Eigen::Index>(g.size()));
  return newton(grid, sys, to_vec(guess.values()), options, one);
}

Field solve_local(double k, double d, const Field& guess, const NewtonOptions& options) {
  return solve_local_newton(k, d, guess, options).solution;
}

double nonlocal_algebraic_residual(const Field& v, double k, double d, double m) {
  const Grid& g = v.grid();
  std::vector<double> vk(v.size());
  for (std::size_t i = 0; i < vk.size(); ++i) vk[i] = std::pow(v[i], k);
  const double theta = m / integrate(g, vk);
  std::vector<double> r(v.size());
  div_grad(g, v.values(), r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d * r[i] - v[i] + theta * vk[i];
  return weighted_norm(g, to_vec(r));
}

SteadySolution rescale_to_nonlocal(const Field& w, double k, double d, double m) {
  if (k == 1.0) throw std::invalid_argument("rescale_to_nonlocal: k = 1 is degenerate");
  if (!(m > 0.0)) throw std::invalid_argument("rescale_to_nonlocal: m must be positive");
  if (w.min() <= 0.0) throw std::invalid_argument("rescale_to_nonlocal: w must be positive");
  const GridPtr& grid = w.grid_ptr();
  const Grid& g = *grid;
  const double m0 = integrate(w);
  const double s = m / m0;
  const Field v = w * s;
  std::vector<double> vk(v.size());
  for (std::size_t i = 0; i < vk.size(); ++i) vk[i] = std::pow(v[i], k);
  const double int_vk = integrate(g, vk);
  const double lhs = std::pow(s, 1.0 - k);
  const double rhs = m / int_vk;
  if (std::abs(lhs - rhs) > 1e-8 * std::abs(rhs)) {
    throw std::runtime_error("rescale_to_nonlocal: scaling identity violated (" + std::to_string(lhs) +
                             " vs " + std::to_string(rhs) + "); w is not a solution of the local problem");
  }
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rhs * vk[i];

  SteadySolution out{v, Field(grid, std::move(u))};
  out.theta = rhs;
  out.residual = nonlocal_algebraic_residual(v, k, d, m);
  out.is_constant = near_constant(v.values());
  out.amplitude = v.max() / v.min();
  out.max_log_jump = max_log_jump(out.u);
  return out;
}

double nonlocal_exponential_residual(const Field& vt, double m_tilde, double d) {
  const Grid& g = vt.grid();
  const double top = vt.max();
  std::vector<double> e(vt.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(vt[i] - top);
  const double s = integrate(g, e);
  std::vector<double> r(vt.size());
  div_grad(g, vt.values(), r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d * r[i] - vt[i] + m_tilde * e[i] / s;
  return weighted_norm(g, to_vec(r));
}

NewtonResult solve_nonlocal_exponential_newton(double m_tilde, double d, const Field& guess,
                                               const NewtonOptions& options) {
  if (!(m_tilde > 0.0)) throw std::invalid_argument("solve_nonlocal_exponential: m_tilde must be positive");
  if (!(d > 0.0)) throw std::invalid_argument("solve_nonlocal_exponential: d must be positive");
  const GridPtr& grid = guess.grid_ptr();
  const Grid& g = *grid;
  const auto w = g.weights();
  const SpMat base = shifted_laplacian(g, d);
  Eigen::SparseLU<SpMat> lu;
  bool analysed = false;

  // Exponentials are shifted by max(x) so that only ratios e^x / S appear.
  const auto scaled_exp = [&](const Vec& x, Vec& e, double& s) {
    const double top = x.maxCoeff();
    e = (x.array() - top).exp().matrix();
    s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += w[i] * e[i];
  };

  NonlinearSystem sys;
  sys.residual = [&](const Vec& x, Vec& f) {
    if (!x.allFinite()) return false;
    Vec e;
    double s = 0.0;
    scaled_exp(x, e, s);
    f = diffusion_minus_identity(g, d, x) + (m_tilde / s) * e;
    return f.allFinite();
  };
  sys.solve_jacobian = [&](const Vec& x, const Vec& rhs) {
    Vec e;
    double s = 0.0;
    scaled_exp(x, e, s);
    SpMat t = base;
    for (Eigen::Index i = 0; i < x.size(); ++i) t.coeffRef(i, i) += m_tilde * e[i] / s;
    // J = T + a b^T with a = -(m_tilde / S^2) e and b = w o e.
    const Vec a = -(m_tilde / (s * s)) * e;
    Vec b(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) b[i] = w[i] * e[i];
    const Vec y = sparse_solve(lu, analysed, t, rhs);
    const Vec z = lu.solve(a);
    const double denom = 1.0 + b.dot(z);
    if (std::abs(denom) < 1e-14) throw ConvergenceError("singular rank-one update in nonlocal Newton");
    return Vec(y - z * (b.dot(y) / denom));
  };
  const Vec c = Vec::Constant(static_cast<Eigen::Index>(g.size()), m_tilde / domain_size(g));
  return newton(grid, sys, to_vec(guess.values()), options, c);
}

SteadySolution solve_nonlocal_exponential(double m_tilde, double d, const Field& guess, double chi_eff,
                                          const NewtonOptions& options) {
  if (!(chi_eff > 0.0)) throw std::invalid_argument("solve_nonlocal_exponential: chi_eff must be positive");
  NewtonResult r = solve_nonlocal_exponential_newton(m_tilde, d, guess, options);
  const Field& vt = r.solution;
  const GridPtr& grid = vt.grid_ptr();
  const double top = vt.max();
  std::vector<double> e(vt.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(vt[i] - top);
  const double s = integrate(*grid, e);
  const double m = m_tilde / chi_eff;
  std::vector<double> u(e.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = m * e[i] / s;

  SteadySolution out{vt * (1.0 / chi_eff), Field(grid, std::move(u))};
  out.theta = m * std::exp(-top) / s;
  out.residual = r.residual;
  out.is_constant = near_constant(vt.values());
  out.amplitude = vt.max() / vt.min();
  out.newton_iterations = r.iterations;
  out.max_log_jump = max_log_jump(out.u);
  return out;
}

Field first_neumann_mode(const GridPtr& grid) {
  constexpr double bessel_j1_first_zero = 3.8317059702075123;
  const Domain& dom = grid->domain();
  switch (dom.shape()) {
    case Shape::interval: {
      const double l = dom.extent(0);
      return Field::sample(grid, [l](double x, double) { return std::cos(std::numbers::pi * x / l); });
    }
    case Shape::rectangle: {
      const double lx = dom.extent(0);
      const double ly = dom.extent(1);
      if (lx >= ly) return Field::sample(grid, [lx](double x, double) { return std::cos(std::numbers::pi * x / lx); });
      return Field::sample(grid, [ly](double, double y) { return std::cos(std::numbers::pi * y / ly); });
    }
    case Shape::radial_disc: {
      const double r0 = dom.extent(0);
      return Field::sample(grid, [r0](double r, double) {
        return std::cyl_bessel_j(0.0, bessel_j1_first_zero * r / r0);
      });
    }
  }
  throw std::logic_error("unknown shape");
}

Field perturbed_constant_guess(const GridPtr& grid, double c) {
  const Field psi = first_neumann_mode(grid);
  std::vector<double> out(psi.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * (1.0 + 0.3 * psi[i]);
  return Field(grid, std::move(out));
}

Field random_positive_guess(const GridPtr& grid, double c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.2, 0.2);
  std::array<double, 4> ax{};
  std::array<double, 4> ay{};
  for (auto& a : ax) a = amp(rng);
  for (auto& a : ay) a = amp(rng);
  const Domain& dom = grid->domain();
  const double lx = dom.extent(0);
  const double ly = dom.shape() == Shape::rectangle ? dom.extent(1) : 1.0;
  const bool two_axes = dom.shape() == Shape::rectangle;
  return Field::sample(grid, [&](double x, double y) {
    double s = 1.0;
    for (int j = 0; j < 4; ++j) {
      s += (two_axes ? 0.5 : 1.0) * ax[j] * std::cos((j + 1) * std::numbers::pi * x / lx);
      if (two_axes) s += 0.5 * ay[j] * std::cos((j + 1) * std::numbers::pi * y / ly);
    }
    return c * s;
  });
}

SteadyProblem SteadyProblem::algebraic(GridPtr grid, double k, double d, double m) {
  if (!(k > 0.0)) throw std::invalid_argument("algebraic steady problem needs k > 0");
  if (!(d > 0.0) || !(m > 0.0)) throw std::invalid_argument("steady problem needs d > 0 and m > 0");
  SteadyProblem p;
  p.kind = SteadyKind::algebraic;
  p.grid = std::move(grid);
  p.k = k;
  p.d = d;
  p.m = m;
  return p;
}

SteadyProblem SteadyProblem::exponential(GridPtr grid, double m_tilde, double d, double chi_eff) {
  if (!(m_tilde > 0.0)) throw std::invalid_argument("exponential steady problem needs m_tilde > 0");
  if (!(d > 0.0) || !(chi_eff > 0.0)) throw std::invalid_argument("steady problem needs d > 0 and chi_eff > 0");
  SteadyProblem p;
  p.kind = SteadyKind::exponential;
  p.grid = std::move(grid);
  p.m_tilde = m_tilde;
  p.d = d;
  p.chi_eff = chi_eff;
  p.m = m_tilde / chi_eff;
  return p;
}

SteadySolution solve_steady(const SteadyProblem& problem, const Field& guess, const NewtonOptions& options) {
  if (problem.kind == SteadyKind::exponential) {
    return solve_nonlocal_exponential(problem.m_tilde, problem.d, guess, problem.chi_eff, options);
  }
  if (problem.k == 1.0) {
    // Linear case: only the constant carries the mass constraint.
    const Field v = Field::constant(problem.grid, problem.m / problem.grid->measure());
    SteadySolution out{v, v};
    out.theta = 1.0;
    out.residual = nonlocal_algebraic_residual(v, 1.0, problem.d, problem.m);
    out.newton_iterations = 0;
    return out;
  }
  NewtonResult r = solve_local_newton(problem.k, problem.d, guess, options);
  SteadySolution out = rescale_to_nonlocal(r.solution, problem.k, problem.d, problem.m);
  out.newton_iterations = r.iterations;
  return out;
}

}  // namespace kslab
