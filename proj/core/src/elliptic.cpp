#include "kslab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kslab/errors.hpp"

namespace kslab {

EllipticOperator::EllipticOperator(GridPtr grid, double d) : grid_(std::move(grid)), d_(d) {
  if (!grid_) throw std::invalid_argument("elliptic operator needs a grid");
  if (!(d_ > 0.0) || !std::isfinite(d_)) throw std::invalid_argument("diffusion rate d must be positive");

  const Grid& g = *grid_;
  const auto w = g.weights();
  const auto tx = g.transmissibility_x();
  const auto ty = g.transmissibility_y();
  const int nx = g.nx();
  const int ny = g.ny();

  diag_.assign(w.begin(), w.end());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = g.index(i, j);
      const std::size_t f = static_cast<std::size_t>(j) * (nx + 1) + i;
      diag_[c] += d_ * (tx[f] + tx[f + 1]);
      if (g.mesh_axes() == 2) {
        diag_[c] += d_ * (ty[static_cast<std::size_t>(j) * nx + i] + ty[static_cast<std::size_t>(j + 1) * nx + i]);
      }
    }
  }

  if (g.mesh_axes() == 1) {
    // Off-diagonals are -d * t_{i+1/2}; the matrix is diagonally dominant so
    // elimination without pivoting is stable.
    const std::size_t n = g.size();
    lower_.resize(n);
    upper_prime_.resize(n);
    denom_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      lower_[i] = i > 0 ? -d_ * tx[i] : 0.0;
      const double upper = i + 1 < n ? -d_ * tx[i + 1] : 0.0;
      denom_[i] = diag_[i] - (i > 0 ? lower_[i] * upper_prime_[i - 1] : 0.0);
      upper_prime_[i] = upper / denom_[i];
    }
  }
}

void EllipticOperator::apply(std::span<const double> x, std::span<double> y) const {
  const Grid& g = *grid_;
  const auto tx = g.transmissibility_x();
  const auto ty = g.transmissibility_y();
  const int nx = g.nx();
  const int ny = g.ny();
  for (std::size_t c = 0; c < x.size(); ++c) y[c] = diag_[c] * x[c];
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const std::size_t frow = static_cast<std::size_t>(j) * (nx + 1);
    for (int i = 1; i < nx; ++i) {
      const double t = d_ * tx[frow + i];
      y[row + i] -= t * x[row + i - 1];
      y[row + i - 1] -= t * x[row + i];
    }
  }
  if (g.mesh_axes() == 2) {
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double t = d_ * ty[static_cast<std::size_t>(j) * nx + i];
        const std::size_t up = g.index(i, j);
        const std::size_t down = g.index(i, j - 1);
        y[up] -= t * x[down];
        y[down] -= t * x[up];
      }
    }
  }
}

void EllipticOperator::solve_tridiagonal(std::span<const double> rhs, std::span<double> v) const {
  const std::size_t n = rhs.size();
  v[0] = rhs[0] / denom_[0];
  for (std::size_t i = 1; i < n; ++i) v[i] = (rhs[i] - lower_[i] * v[i - 1]) / denom_[i];
  for (std::size_t i = n - 1; i-- > 0;) v[i] -= upper_prime_[i] * v[i + 1];
}

int EllipticOperator::solve_cg(std::span<const double> rhs, std::span<double> v, bool warm_start) const {
  const std::size_t n = rhs.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  if (!warm_start) std::fill(v.begin(), v.end(), 0.0);
  apply(v, q);
  double rhs_norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = rhs[i] - q[i];
    rhs_norm2 += rhs[i] * rhs[i];
  }
  if (rhs_norm2 == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    return 0;
  }
  const double tol2 = 1e-24 * rhs_norm2;
  const int cap = static_cast<int>(20 * n);

  double rz = 0.0;
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = r[i] / diag_[i];
    p[i] = z[i];
    rz += r[i] * z[i];
    rr += r[i] * r[i];
  }
  int it = 0;
  while (rr > tol2) {
    if (it >= cap) throw ConvergenceError("elliptic CG did not converge within the iteration cap");
    apply(p, q);
    double pq = 0.0;
    for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
    const double step = rz / pq;
    rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += step * p[i];
      r[i] -= step * q[i];
      rr += r[i] * r[i];
    }
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / diag_[i];
      rz_new += r[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++it;
  }
  return it;
}

int EllipticOperator::solve(std::span<const double> u, std::span<double> v, bool warm_start) const {
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  if (*lo == *hi) {
    // Constants are exact fixed points: the flux part of A annihilates them.
    std::fill(v.begin(), v.end(), *lo);
    return 0;
  }
  const auto w = grid_->weights();
  std::vector<double> rhs(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) rhs[i] = w[i] * u[i];
  if (grid_->mesh_axes() == 1) {
    solve_tridiagonal(rhs, v);
    return 0;
  }
  if (!warm_start) {
    // Cold start from the mean, so CG only works on the fluctuation.
    std::fill(v.begin(), v.end(), integrate(*grid_, u) / grid_->measure());
  }
  return solve_cg(rhs, v, true);
}

Field EllipticOperator::solve_v(const Field& u) const {
  if (&u.grid() != grid_.get()) throw std::invalid_argument("solve_v: field lives on a different grid");
  std::vector<double> v(u.size(), 0.0);
  solve(u.values(), v);
  return Field(grid_, std::move(v));
}

double EllipticOperator::residual_norm(const Field& u, const Field& v) const {
  const auto w = grid_->weights();
  std::vector<double> av(v.size());
  apply(v.values(), av);
  double sum = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double r = av[i] / w[i] - u[i];
    sum += w[i] * r * r;
  }
  return std::sqrt(sum);
}

double min_signal(const Field& v) { return v.min(); }

ExpMoment exp_moment(const Grid& grid, std::span<const double> v, double lambda) {
  ExpMoment out;
  const auto w = grid.weights();
  for (std::size_t i = 0; i < v.size(); ++i) out.value += w[i] * std::exp(lambda * v[i]);
  if (!std::isfinite(out.value)) {
    out.value = std::numeric_limits<double>::infinity();
    out.blowup_suspected = true;
  }
  return out;
}

ExpMoment exp_moment(const Field& v, double lambda) { return exp_moment(v.grid(), v.values(), lambda); }

}  // namespace kslab
