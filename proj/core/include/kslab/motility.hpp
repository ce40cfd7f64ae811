#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kslab/grid.hpp"

namespace kslab {

enum class Family { algebraic, exponential, ks_algebraic, ks_exponential, custom };

std::string to_string(Family family);

/// gamma = sigma1 / v^lambda1, phi = sigma2 / v^lambda2.
struct AlgebraicParams {
  double sigma1, sigma2, lambda1, lambda2;
};

/// gamma = exp(-chi1 v), phi = delta exp(-chi2 v).
struct ExponentialParams {
  double chi1, chi2, delta;
};

/// gamma = sigma / v^lambda with phi = (alpha - 1) gamma'.
struct KsAlgebraicParams {
  double sigma, lambda, alpha;
};

/// gamma = exp(-chi v) with phi = (alpha - 1) gamma'.
struct KsExponentialParams {
  double chi, alpha;
};

/// User-supplied closed forms; derivatives are mandatory.
struct CustomParams {
  std::function<double(double)> gamma, dgamma, phi, dphi;
  std::string label;
};

struct MotilityValues {
  double gamma;
  double dgamma;
  double phi;
  double dphi;
};

/// A (gamma, phi) motility pair. Immutable; all queries are pure.
class MotilityPair {
 public:
  using Params = std::variant<AlgebraicParams, ExponentialParams, KsAlgebraicParams, KsExponentialParams, CustomParams>;

  static MotilityPair algebraic(double sigma1, double sigma2, double lambda1, double lambda2);
  static MotilityPair exponential(double chi1, double chi2, double delta);
  static MotilityPair ks_algebraic(double sigma, double lambda, double alpha);
  static MotilityPair ks_exponential(double chi, double alpha);
  static MotilityPair custom(CustomParams params);

  Family family() const;
  const Params& params() const { return params_; }
  std::string describe() const;

  /// True when the closed forms are singular at v = 0.
  bool singular_at_zero() const;

  /// Throws std::domain_error for v outside the family's domain.
  MotilityValues eval(double v) const;
  double gamma(double v) const;
  double phi(double v) const;

  /// Parameters of the equivalent general family (I) or (II), if any.
  std::optional<AlgebraicParams> as_algebraic() const;
  std::optional<ExponentialParams> as_exponential() const;

 private:
  explicit MotilityPair(Params p) : params_(std::move(p)) {}
  void check_argument(double v) const;

  Params params_;
};

/// gamma |phi'| / phi^2. Closed form for the built-in families.
double h3_functional(const MotilityPair& pair, double v);

/// Integral of phi(v)^{-p} over v's grid.
double phi_inverse_moment(const MotilityPair& pair, const Field& v, double p);
double phi_inverse_moment(const MotilityPair& pair, const Grid& grid, std::span<const double> v, double p);

enum class EtaMode { user, measured };
std::string to_string(EtaMode mode);

/// One inequality of the report. `witness_mid` is set for two-sided conditions
/// (witness_lhs < witness_mid < witness_rhs).
struct Condition {
  std::string name;
  bool applicable = true;
  bool pass = false;
  double witness_lhs = 0.0;
  double witness_rhs = 0.0;
  std::optional<double> witness_mid;
  bool approximate = false;
  std::string detail;
};

/// Half-open interval (lower, upper] of p values.
struct PRange {
  double lower = 0.0;
  double upper = 0.0;
  bool nonempty = false;
  bool contains(double p) const { return nonempty && p > lower && p <= upper; }
};

struct HypothesisReport {
  int n = 2;
  double eta = 0.0;
  double d = 1.0;
  double m = 1.0;
  EtaMode eta_mode = EtaMode::user;

  Condition h1, h2a, h2b, h3;
  /// inf of gamma|phi'|/phi^2 over [eta, inf) and over (0, inf).
  double h3_inf = 0.0;
  double h3_inf_from_zero = 0.0;
  PRange admissible_p;

  Condition thm22_con1, thm22_con2, thm23_i, thm23_ii;
  std::vector<std::string> warnings;

  std::vector<const Condition*> conditions() const;
  bool all_applicable_pass() const;
};

struct CheckOptions {
  /// Upper end of the sampled range for custom pairs.
  double v_max = 1e3;
  int samples = 20000;
};

HypothesisReport check_hypotheses(const MotilityPair& pair, int n, double eta, double d, double m,
                                  EtaMode eta_mode = EtaMode::user, const CheckOptions& options = {});

/// JSON object with inputs, scalars and a `conditions` array of
/// {name, applicable, pass, witness_lhs, witness_rhs, ...}.
std::string report_to_json(const HypothesisReport& report, int indent = 2);

}  // namespace kslab
