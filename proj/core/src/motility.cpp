#include "kslab/motility.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kslab {

std::string to_string(Family family) {
  switch (family) {
    case Family::algebraic: return "algebraic";
    case Family::exponential: return "exponential";
    case Family::ks_algebraic: return "ks_algebraic";
    case Family::ks_exponential: return "ks_exponential";
    case Family::custom: return "custom";
  }
  return "unknown";
}

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

MotilityPair MotilityPair::algebraic(double sigma1, double sigma2, double lambda1, double lambda2) {
  require(finite_positive(sigma1) && finite_positive(sigma2), "algebraic pair: sigma1, sigma2 must be > 0");
  require(finite_positive(lambda1), "algebraic pair: lambda1 must be > 0");
  require(std::isfinite(lambda2) && lambda2 > 1.0, "algebraic pair: lambda2 must be > 1");
  return MotilityPair(AlgebraicParams{sigma1, sigma2, lambda1, lambda2});
}

MotilityPair MotilityPair::exponential(double chi1, double chi2, double delta) {
  require(finite_positive(chi1) && finite_positive(chi2) && finite_positive(delta),
          "exponential pair: chi1, chi2, delta must be > 0");
  return MotilityPair(ExponentialParams{chi1, chi2, delta});
}

MotilityPair MotilityPair::ks_algebraic(double sigma, double lambda, double alpha) {
  require(finite_positive(sigma) && finite_positive(lambda), "ks_algebraic pair: sigma, lambda must be > 0");
  require(std::isfinite(alpha) && alpha < 1.0, "ks_algebraic pair: alpha must be < 1");
  return MotilityPair(KsAlgebraicParams{sigma, lambda, alpha});
}

MotilityPair MotilityPair::ks_exponential(double chi, double alpha) {
  require(finite_positive(chi), "ks_exponential pair: chi must be > 0");
  require(std::isfinite(alpha) && alpha < 1.0, "ks_exponential pair: alpha must be < 1");
  return MotilityPair(KsExponentialParams{chi, alpha});
}

MotilityPair MotilityPair::custom(CustomParams params) {
  require(params.gamma && params.dgamma && params.phi && params.dphi,
          "custom pair: gamma, gamma', phi and phi' must all be supplied");
  return MotilityPair(std::move(params));
}

Family MotilityPair::family() const {
  return std::visit(overloaded{[](const AlgebraicParams&) { return Family::algebraic; },
                               [](const ExponentialParams&) { return Family::exponential; },
                               [](const KsAlgebraicParams&) { return Family::ks_algebraic; },
                               [](const KsExponentialParams&) { return Family::ks_exponential; },
                               [](const CustomParams&) { return Family::custom; }},
                    params_);
}

std::string MotilityPair::describe() const {
  std::ostringstream os;
  std::visit(overloaded{[&](const AlgebraicParams& p) {
                          os << "algebraic(sigma1=" << p.sigma1 << ", sigma2=" << p.sigma2 << ", lambda1=" << p.lambda1
                             << ", lambda2=" << p.lambda2 << ")";
                        },
                        [&](const ExponentialParams& p) {
                          os << "exponential(chi1=" << p.chi1 << ", chi2=" << p.chi2 << ", delta=" << p.delta << ")";
                        },
                        [&](const KsAlgebraicParams& p) {
                          os << "ks_algebraic(sigma=" << p.sigma << ", lambda=" << p.lambda << ", alpha=" << p.alpha
                             << ")";
                        },
                        [&](const KsExponentialParams& p) {
                          os << "ks_exponential(chi=" << p.chi << ", alpha=" << p.alpha << ")";
                        },
                        [&](const CustomParams& p) { os << "custom(" << p.label << ")"; }},
             params_);
  return os.str();
}

bool MotilityPair::singular_at_zero() const {
  const Family f = family();
  return f == Family::algebraic || f == Family::ks_algebraic;
}

void MotilityPair::check_argument(double v) const {
  if (!std::isfinite(v)) throw std::domain_error("motility evaluated at a non-finite signal value");
  if (singular_at_zero() && !(v > 0.0)) {
    throw std::domain_error("algebraic motility needs v > 0");
  }
  if ((family() == Family::exponential || family() == Family::ks_exponential) && v < 0.0) {
    throw std::domain_error("exponential motility needs v >= 0");
  }
}

MotilityValues MotilityPair::eval(double v) const {
  check_argument(v);
  return std::visit(
      overloaded{[v](const AlgebraicParams& p) {
                   const double g = p.sigma1 * std::pow(v, -p.lambda1);
                   const double f = p.sigma2 * std::pow(v, -p.lambda2);
                   return MotilityValues{g, -p.lambda1 * g / v, f, -p.lambda2 * f / v};
                 },
                 [v](const ExponentialParams& p) {
                   const double g = std::exp(-p.chi1 * v);
                   const double f = p.delta * std::exp(-p.chi2 * v);
                   return MotilityValues{g, -p.chi1 * g, f, -p.chi2 * f};
                 },
                 [v](const KsAlgebraicParams& p) {
                   const double g = p.sigma * std::pow(v, -p.lambda);
                   const double dg = -p.lambda * g / v;
                   const double d2g = p.lambda * (p.lambda + 1.0) * g / (v * v);
                   return MotilityValues{g, dg, (1.0 - p.alpha) * -dg, (1.0 - p.alpha) * -d2g};
                 },
                 [v](const KsExponentialParams& p) {
                   const double g = std::exp(-p.chi * v);
                   const double dg = -p.chi * g;
                   const double d2g = p.chi * p.chi * g;
                   return MotilityValues{g, dg, (1.0 - p.alpha) * -dg, (1.0 - p.alpha) * -d2g};
                 },
                 [v](const CustomParams& p) { return MotilityValues{p.gamma(v), p.dgamma(v), p.phi(v), p.dphi(v)}; }},
      params_);
}

double MotilityPair::gamma(double v) const { return eval(v).gamma; }
double MotilityPair::phi(double v) const { return eval(v).phi; }

std::optional<AlgebraicParams> MotilityPair::as_algebraic() const {
  if (const auto* p = std::get_if<AlgebraicParams>(&params_)) return *p;
  if (const auto* p = std::get_if<KsAlgebraicParams>(&params_)) {
    return AlgebraicParams{p->sigma, (1.0 - p->alpha) * p->sigma * p->lambda, p->lambda, p->lambda + 1.0};
  }
  return std::nullopt;
}

std::optional<ExponentialParams> MotilityPair::as_exponential() const {
  if (const auto* p = std::get_if<ExponentialParams>(&params_)) return *p;
  if (const auto* p = std::get_if<KsExponentialParams>(&params_)) {
    return ExponentialParams{p->chi, p->chi, (1.0 - p->alpha) * p->chi};
  }
  return std::nullopt;
}

double h3_functional(const MotilityPair& pair, double v) {
  const MotilityValues mv = pair.eval(v);
  if (mv.phi == 0.0) throw std::domain_error("h3 functional undefined where phi(v) = 0");
  switch (pair.family()) {
    case Family::algebraic: {
      const auto& p = std::get<AlgebraicParams>(pair.params());
      return p.sigma1 * p.lambda2 / p.sigma2 * std::pow(v, p.lambda2 - p.lambda1 - 1.0);
    }
    case Family::exponential: {
      const auto& p = std::get<ExponentialParams>(pair.params());
      return p.chi2 / p.delta * std::exp((p.chi2 - p.chi1) * v);
    }
    case Family::ks_algebraic: {
      const auto& p = std::get<KsAlgebraicParams>(pair.params());
      return (p.lambda + 1.0) / ((1.0 - p.alpha) * p.lambda);
    }
    case Family::ks_exponential: {
      const auto& p = std::get<KsExponentialParams>(pair.params());
      return 1.0 / (1.0 - p.alpha);
    }
    case Family::custom: break;
  }
  return mv.gamma * std::abs(mv.dphi) / (mv.phi * mv.phi);
}

double phi_inverse_moment(const MotilityPair& pair, const Grid& grid, std::span<const double> v, double p) {
  const auto w = grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = pair.phi(v[i]);
    if (f == 0.0) throw std::domain_error("phi vanishes in a cell; phi^{-p} moment undefined");
    sum += w[i] * std::pow(f, -p);
  }
  return sum;
}

double phi_inverse_moment(const MotilityPair& pair, const Field& v, double p) {
  return phi_inverse_moment(pair, v.grid(), v.values(), p);
}

}  // namespace kslab
