#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kslab/evolve.hpp"

namespace kslab {

PeiReport monitor_pei(std::span<const DiagRecord> trajectory, double p, std::optional<PRange> admissible) {
  PeiReport rep;
  rep.p = p;
  if (admissible && !admissible->contains(p)) {
    rep.p_admissible = false;
    std::ostringstream os;
    os << "p = " << p << " lies outside the admissible range (" << admissible->lower << ", " << admissible->upper
       << "]";
    rep.warnings.push_back(os.str());
  }
  const std::size_t n = trajectory.size();
  if (n < 2) {
    rep.warnings.push_back("trajectory too short for a time derivative");
    return rep;
  }

  rep.t.resize(n);
  rep.lhs.resize(n);
  rep.basis.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == n ? n - 1 : k + 1;
    const double deriv = (trajectory[b].lp_u - trajectory[a].lp_u) / (trajectory[b].t - trajectory[a].t);
    rep.t[k] = trajectory[k].t;
    rep.lhs[k] = deriv + trajectory[k].lp_u;
    rep.basis[k] = trajectory[k].phi_inv_moment;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(rep.lhs[k]) || !std::isfinite(rep.basis[k]) || !(rep.basis[k] > 0.0)) {
      rep.warnings.push_back("non-finite or non-positive entries; no fit attempted");
      return rep;
    }
  }

  // For fixed c1 the least feasible c0 is max(0, max_k(lhs_k - c1*B_k)); the
  // mean bound c0 + c1*mean(B) is then convex piecewise-linear in c1.
  const double mean_basis = std::accumulate(rep.basis.begin(), rep.basis.end(), 0.0) / n;
  auto c0_of = [&](double c1) {
    double c0 = 0.0;
    for (std::size_t k = 0; k < n; ++k) c0 = std::max(c0, rep.lhs[k] - c1 * rep.basis[k]);
    return c0;
  };
  auto objective = [&](double c1) { return c0_of(c1) + c1 * mean_basis * (1.0 + 1e-9); };

  double hi = 0.0;
  for (std::size_t k = 0; k < n; ++k) hi = std::max(hi, rep.lhs[k] / rep.basis[k]);
  double lo = 0.0;
  if (hi > 0.0) {
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * hi; ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - golden * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + golden * (b - a);
        f2 = objective(x2);
      }
    }
    double best = 0.5 * (a + b);
    // The endpoints are vertices of the feasible set; keep whichever is best.
    for (double cand : {0.0, hi}) {
      if (objective(cand) <= objective(best)) best = cand;
    }
    rep.c1 = best;
  }
  rep.c0 = c0_of(rep.c1);
  rep.fit_ok = std::isfinite(rep.c0) && std::isfinite(rep.c1) && rep.c0 <= 1e6 && rep.c1 <= 1e6;
  return rep;
}

}  // namespace kslab
