#pragma once

#include <span>
#include <vector>

#include "kslab/grid.hpp"

namespace kslab {

/// The signal operator  -d*Laplacian + I  with zero-flux boundaries.
///
/// Assembled in integrated form A = W - d*L, where W holds the cell weights
/// and L is the flux-form DivGrad; A is a symmetric M-matrix. One-axis grids
/// (interval, radial disc) are factorised once and solved by tridiagonal
/// elimination. Rectangles use Jacobi-preconditioned conjugate gradients with
/// relative tolerance 1e-12 and an iteration cap of 20 * cells.
class EllipticOperator {
 public:
  EllipticOperator(GridPtr grid, double d);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  double d() const { return d_; }

  /// v solving -d*Lap(v) + v = u.
  Field solve_v(const Field& u) const;

  /// Raw form. When `warm_start` is set, `v` seeds the CG iteration. Returns
  /// the number of CG iterations (0 for direct solves).
  int solve(std::span<const double> u, std::span<double> v, bool warm_start = false) const;

  /// y = A x (integrated form).
  void apply(std::span<const double> x, std::span<double> y) const;

  /// Volume-weighted 2-norm of -d*Lap(v) + v - u.
  double residual_norm(const Field& u, const Field& v) const;

 private:
  int solve_cg(std::span<const double> rhs, std::span<double> v, bool warm_start) const;
  void solve_tridiagonal(std::span<const double> rhs, std::span<double> v) const;

  GridPtr grid_;
  double d_;
  std::vector<double> diag_;
  // Thomas factorisation for one-axis grids.
  std::vector<double> lower_;
  std::vector<double> upper_prime_;
  std::vector<double> denom_;
};

/// Cell-wise minimum of v; the running value along a run is the measured eta.
double min_signal(const Field& v);

struct ExpMoment {
  double value = 0.0;
  /// exp(Lambda v) overflowed; value is +inf.
  bool blowup_suspected = false;
};

/// Integral of exp(Lambda v).
ExpMoment exp_moment(const Field& v, double lambda);
ExpMoment exp_moment(const Grid& grid, std::span<const double> v, double lambda);

}  // namespace kslab
