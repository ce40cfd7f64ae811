#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "kslab/motility.hpp"

namespace kslab {

std::string to_string(EtaMode mode) { return mode == EtaMode::user ? "user" : "measured"; }

std::vector<const Condition*> HypothesisReport::conditions() const {
  return {&h1, &h2a, &h2b, &h3, &thm22_con1, &thm22_con2, &thm23_i, &thm23_ii};
}

bool HypothesisReport::all_applicable_pass() const {
  for (const Condition* c : conditions()) {
    if (c->applicable && !c->pass) return false;
  }
  return true;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Samples {
  double min_gamma = kInf;
  double min_phi = kInf;
  double max_dphi = -kInf;
  double min_h3 = kInf;
  bool all_finite = true;
};

// Geometric sampling of [lo, hi] for custom pairs.
Samples sample_custom(const MotilityPair& pair, double lo, double hi, int count) {
  Samples s;
  const double ratio = hi / lo;
  for (int i = 0; i < count; ++i) {
    const double v = lo * std::pow(ratio, static_cast<double>(i) / (count - 1));
    const MotilityValues mv = pair.eval(v);
    if (!std::isfinite(mv.gamma) || !std::isfinite(mv.phi) || !std::isfinite(mv.dphi)) {
      s.all_finite = false;
      continue;
    }
    s.min_gamma = std::min(s.min_gamma, mv.gamma);
    s.min_phi = std::min(s.min_phi, mv.phi);
    s.max_dphi = std::max(s.max_dphi, mv.dphi);
    if (mv.phi != 0.0) s.min_h3 = std::min(s.min_h3, mv.gamma * std::abs(mv.dphi) / (mv.phi * mv.phi));
  }
  return s;
}

// inf over [from, inf) of c * v^e (from > 0), or over (0, inf) when from == 0.
double power_law_inf(double c, double e, double from) {
  if (std::abs(e) < 1e-14) return c;
  if (e < 0.0) return 0.0;
  return from > 0.0 ? c * std::pow(from, e) : 0.0;
}

// inf over [from, inf) of c * exp(e v).
double exp_law_inf(double c, double e, double from) {
  if (std::abs(e) < 1e-14) return c;
  if (e < 0.0) return 0.0;
  return c * std::exp(e * from);
}

Condition not_applicable(std::string name, std::string why) {
  Condition c;
  c.name = std::move(name);
  c.applicable = false;
  c.detail = std::move(why);
  return c;
}

}  // namespace

HypothesisReport check_hypotheses(const MotilityPair& pair, int n, double eta, double d, double m, EtaMode eta_mode,
                                  const CheckOptions& options) {
  if (n < 1) throw std::invalid_argument("check_hypotheses: n must be >= 1");
  if (!(eta > 0.0) || !(d > 0.0) || !(m > 0.0)) {
    throw std::invalid_argument("check_hypotheses: eta, d and m must be positive");
  }

  HypothesisReport r;
  r.n = n;
  r.eta = eta;
  r.d = d;
  r.m = m;
  r.eta_mode = eta_mode;
  const double half_n = 0.5 * n;
  const Family family = pair.family();
  const bool custom = family == Family::custom;

  Samples sampled;
  Samples sampled_from_zero;
  if (custom) {
    const double hi = std::max(options.v_max, 2.0 * eta);
    sampled = sample_custom(pair, eta, hi, options.samples);
    sampled_from_zero = sample_custom(pair, 1e-8, hi, options.samples);
  }

  // (H1)
  r.h1.name = "H1";
  r.h1.witness_rhs = 0.0;
  if (custom) {
    r.h1.witness_lhs = sampled.min_gamma;
    r.h1.pass = sampled.all_finite && sampled.min_gamma > 0.0;
    r.h1.approximate = true;
    r.h1.detail = "min gamma sampled on [eta, v_max]";
  } else {
    r.h1.witness_lhs = pair.gamma(eta);
    r.h1.pass = r.h1.witness_lhs > 0.0;
    r.h1.detail = pair.singular_at_zero() ? "gamma > 0 on [eta, inf); singular at v = 0" : "gamma > 0 on [0, inf)";
  }

  // (H2a)
  r.h2a.name = "H2a";
  r.h2a.witness_rhs = 0.0;
  if (custom) {
    r.h2a.witness_lhs = sampled.max_dphi;
    r.h2a.pass = sampled.all_finite && sampled.min_phi >= 0.0 && sampled.max_dphi < 0.0;
    r.h2a.approximate = true;
    r.h2a.detail = "max phi' sampled on [eta, v_max]; also requires phi >= 0";
  } else {
    // phi > 0 and phi' < 0 hold identically for valid parameters.
    r.h2a.witness_lhs = pair.eval(eta).dphi;
    r.h2a.pass = r.h2a.witness_lhs < 0.0 && pair.phi(eta) >= 0.0;
    r.h2a.detail = "phi' at eta (phi' < 0 everywhere)";
  }

  // (H2b)
  if (n <= 3) {
    r.h2b = not_applicable("H2b", "only required for n > 3");
  } else if (custom) {
    r.h2b = not_applicable("H2b", "limit of v*phi(v) not checked for custom pairs");
    r.warnings.push_back("H2b skipped for custom pair (n > 3)");
  } else {
    r.h2b.name = "H2b";
    r.h2b.witness_lhs = 0.0;  // v*phi(v) -> 0 for lambda2 > 1 and for exponential decay
    r.h2b.witness_rhs = kInf;
    r.h2b.pass = true;
    r.h2b.detail = "lim v*phi(v) as v -> inf";
  }

  // (H3)
  switch (family) {
    case Family::algebraic:
    case Family::ks_algebraic: {
      const AlgebraicParams p = *pair.as_algebraic();
      const double c = p.sigma1 * p.lambda2 / p.sigma2;
      const double e = p.lambda2 - p.lambda1 - 1.0;
      r.h3_inf = power_law_inf(c, e, eta);
      r.h3_inf_from_zero = power_law_inf(c, e, 0.0);
      break;
    }
    case Family::exponential:
    case Family::ks_exponential: {
      const ExponentialParams p = *pair.as_exponential();
      const double c = p.chi2 / p.delta;
      const double e = p.chi2 - p.chi1;
      r.h3_inf = exp_law_inf(c, e, eta);
      r.h3_inf_from_zero = exp_law_inf(c, e, 0.0);
      break;
    }
    case Family::custom:
      r.h3_inf = sampled.min_h3;
      r.h3_inf_from_zero = sampled_from_zero.min_h3;
      r.h3.approximate = true;
      break;
  }
  r.h3.name = "H3";
  r.h3.witness_lhs = r.h3_inf;
  r.h3.witness_rhs = half_n;
  r.h3.pass = r.h3_inf > half_n;
  {
    std::ostringstream os;
    os << "inf over [eta, inf) of gamma|phi'|/phi^2; inf over (0, inf) = " << r.h3_inf_from_zero;
    r.h3.detail = os.str();
  }
  r.admissible_p = PRange{half_n, r.h3_inf, r.h3.pass};

  const bool multi_d = n >= 2;
  const char* one_d = "stated for n >= 2; n = 1 needs only H1 and H2a";

  // Algebraic decay: lambda2 >= lambda1 + 1 and min{...} > n/2.
  if (auto p = pair.as_algebraic(); p && multi_d) {
    Condition& c = r.thm22_con1;
    c.name = "thm22_con1";
    const double rate_term = p->sigma1 * p->lambda2 / p->sigma2 * std::pow(eta, p->lambda2 - p->lambda1 - 1.0);
    c.witness_lhs = std::min(p->lambda2 / (p->lambda2 - 1.0), rate_term);
    c.witness_rhs = half_n;
    const bool order = p->lambda2 >= p->lambda1 + 1.0;
    c.pass = order && c.witness_lhs > c.witness_rhs;
    c.detail = order ? "min{lambda2/(lambda2-1), sigma1*lambda2/sigma2*eta^(lambda2-lambda1-1)} > n/2"
                     : "fails lambda2 >= lambda1 + 1";
  } else {
    r.thm22_con1 = not_applicable("thm22_con1", p ? one_d : "requires an algebraic-decay pair");
  }

  // Exponential decay: chi2 >= chi1 and n*delta/2*exp((chi1-chi2)eta) < chi2 < 4 pi d/m, n = 2.
  if (auto p = pair.as_exponential(); p && multi_d) {
    Condition& c = r.thm22_con2;
    c.name = "thm22_con2";
    c.witness_lhs = half_n * p->delta * std::exp((p->chi1 - p->chi2) * eta);
    c.witness_mid = p->chi2;
    c.witness_rhs = 4.0 * std::numbers::pi * d / m;
    const bool order = p->chi2 >= p->chi1;
    c.pass = n == 2 && order && c.witness_lhs < p->chi2 && p->chi2 < c.witness_rhs;
    if (n != 2) c.detail = "requires n = 2";
    else if (!order) c.detail = "fails chi2 >= chi1";
    else c.detail = "n*delta/2*exp((chi1-chi2)eta) < chi2 < 4*pi*d/m";
  } else {
    r.thm22_con2 = not_applicable("thm22_con2", p ? one_d : "requires an exponential-decay pair");
  }

  if (const auto* p = std::get_if<KsAlgebraicParams>(&pair.params()); p && multi_d) {
    Condition& c = r.thm23_i;
    c.name = "thm23_i";
    double bound = kInf;
    if (p->alpha >= 0.0) {
      if (n > 2) bound = 2.0 / (n - 2);
    } else {
      bound = 2.0 / (n * (1.0 - p->alpha) - 2.0);
    }
    c.witness_lhs = p->lambda;
    c.witness_rhs = bound;
    c.pass = p->lambda > 0.0 && p->lambda < bound;
    c.detail = p->alpha >= 0.0 ? "0 < lambda < 2/(n-2) for 0 <= alpha < 1" : "0 < lambda < 2/(n(1-alpha)-2) for alpha < 0";
  } else {
    r.thm23_i = not_applicable("thm23_i", p ? one_d : "requires a ks_algebraic pair");
  }

  if (const auto* p = std::get_if<KsExponentialParams>(&pair.params()); p && multi_d) {
    Condition& c = r.thm23_ii;
    c.name = "thm23_ii";
    c.witness_lhs = p->chi;
    c.witness_rhs = 4.0 * std::numbers::pi * d / m;
    const bool alpha_ok = p->alpha > 0.0 && p->alpha < 1.0;
    c.pass = n == 2 && c.witness_lhs < c.witness_rhs && alpha_ok;
    if (n != 2) c.detail = "requires n = 2";
    else if (!alpha_ok) c.detail = "requires 0 < alpha < 1";
    else c.detail = "chi < 4*pi*d/m and 0 < alpha < 1";
  } else {
    r.thm23_ii = not_applicable("thm23_ii", p ? one_d : "requires a ks_exponential pair");
  }

  return r;
}

namespace {

nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

std::string report_to_json(const HypothesisReport& r, int indent) {
  using nlohmann::json;
  json conditions = json::array();
  for (const Condition* c : r.conditions()) {
    json entry{{"name", c->name},
               {"applicable", c->applicable},
               {"pass", c->pass},
               {"witness_lhs", number(c->witness_lhs)},
               {"witness_rhs", number(c->witness_rhs)}};
    if (c->witness_mid) entry["witness_mid"] = number(*c->witness_mid);
    if (c->approximate) entry["approximate"] = true;
    if (!c->detail.empty()) entry["detail"] = c->detail;
    conditions.push_back(std::move(entry));
  }
  json out{{"inputs", {{"n", r.n}, {"eta", r.eta}, {"eta_mode", to_string(r.eta_mode)}, {"d", r.d}, {"m", r.m}}},
           {"h3_inf", number(r.h3_inf)},
           {"h3_inf_from_zero", number(r.h3_inf_from_zero)},
           {"admissible_p",
            {{"lower", number(r.admissible_p.lower)},
             {"upper", number(r.admissible_p.upper)},
             {"nonempty", r.admissible_p.nonempty}}},
           {"all_applicable_pass", r.all_applicable_pass()},
           {"conditions", std::move(conditions)},
           {"warnings", r.warnings}};
  return out.dump(indent);
}

}  // namespace kslab
