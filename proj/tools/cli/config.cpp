#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "kslab/expression.hpp"

namespace kslab::cli {
namespace {

// Reads known keys from one mapping and rejects the rest.
class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError("'" + name_ + "' must be a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("invalid value for '" + path(key) + "'");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!has(key)) return;
    if (node_[key].IsNull()) {
      out.reset();
      return;
    }
    T value{};
    get(key, value);
    out = value;
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return has(key) ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.contains(key)) throw ConfigError("unknown configuration key '" + path(key) + "'");
    }
  }

  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

template <class T>
void put_optional(YAML::Node node, const std::string& key, const std::optional<T>& value) {
  if (value) {
    node[key] = *value;
  } else {
    node[key] = YAML::Node(YAML::NodeType::Null);
  }
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + sep.size();
  }
  return parts;
}

}  // namespace

void set_key(YAML::Node& root, const std::string& dotted, const YAML::Node& value) {
  const auto parts = split(dotted, ".");
  YAML::Node cur = root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur[parts[i]] || !cur[parts[i]].IsMap()) cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
    YAML::Node next = cur[parts[i]];
    cur.reset(next);
  }
  cur[parts.back()] = value;
}

void apply_env_overrides(YAML::Node& root, char** envp, const std::string& prefix) {
  if (envp == nullptr) return;
  std::vector<std::string> entries;
  for (char** e = envp; *e != nullptr; ++e) entries.emplace_back(*e);
  std::sort(entries.begin(), entries.end());
  for (const std::string& entry : entries) {
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto parts = split(key, "__");
    std::string dotted;
    for (const auto& p : parts) dotted += (dotted.empty() ? "" : ".") + p;
    const std::string raw = entry.substr(eq + 1);
    YAML::Node value;
    try {
      value = YAML::Load(raw);
    } catch (const YAML::Exception&) {
      value = YAML::Node(raw);
    }
    set_key(root, dotted, value);
  }
}

YAML::Node load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    YAML::Node node = YAML::Load(in);
    if (node.IsNull()) node = YAML::Node(YAML::NodeType::Map);
    if (!node.IsMap()) throw ConfigError("config file '" + path + "' must hold a mapping");
    return node;
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse config file '" + path + "': " + e.what());
  }
}

ScenarioConfig parse_config(const YAML::Node& root) {
  ScenarioConfig c;
  Section top(root, "");

  Section dom(top.child("domain"), "domain");
  dom.get("shape", c.domain.shape);
  dom.get("length", c.domain.length);
  dom.get("lx", c.domain.lx);
  dom.get("ly", c.domain.ly);
  dom.get("radius", c.domain.radius);
  dom.finish();
  if (c.domain.shape == "radial_disc") c.domain.shape = "disc";
  require(c.domain.shape == "interval" || c.domain.shape == "rectangle" || c.domain.shape == "disc",
          "domain.shape must be interval, rectangle or disc");
  require(c.domain.length > 0 && c.domain.lx > 0 && c.domain.ly > 0 && c.domain.radius > 0,
          "domain lengths must be positive");

  Section res(top.child("resolution"), "resolution");
  res.get("nx", c.resolution.nx);
  res.get("ny", c.resolution.ny);
  res.finish();
  require(c.resolution.nx >= 4 && c.resolution.ny >= 4, "resolution needs at least 4 cells per axis");

  Section mot(top.child("motility"), "motility");
  mot.get("family", c.motility.family);
  for (auto [key, ptr] : {std::pair{"sigma1", &c.motility.sigma1}, {"sigma2", &c.motility.sigma2},
                          {"lambda1", &c.motility.lambda1}, {"lambda2", &c.motility.lambda2},
                          {"chi1", &c.motility.chi1}, {"chi2", &c.motility.chi2}, {"delta", &c.motility.delta},
                          {"sigma", &c.motility.sigma}, {"lambda", &c.motility.lambda}, {"chi", &c.motility.chi},
                          {"alpha", &c.motility.alpha}}) {
    mot.get(key, *ptr);
  }
  mot.get("gamma", c.motility.gamma);
  mot.get("dgamma", c.motility.dgamma);
  mot.get("phi", c.motility.phi);
  mot.get("dphi", c.motility.dphi);
  mot.finish();
  const std::set<std::string> families{"algebraic", "exponential", "ks_algebraic", "ks_exponential", "custom"};
  require(families.contains(c.motility.family),
          "motility.family must be algebraic, exponential, ks_algebraic, ks_exponential or custom");

  top.get("d", c.d);
  require(c.d > 0, "d must be positive");

  Section ini(top.child("initial"), "initial");
  ini.get("kind", c.initial.kind);
  ini.get("mean", c.initial.mean);
  if (YAML::Node modes = ini.child("modes"); modes && !modes.IsNull()) {
    require(modes.IsSequence(), "initial.modes must be a list");
    c.initial.modes.clear();
    for (const auto& m : modes) {
      CosineMode mode;
      Section ms(m, "initial.modes[]");
      ms.get("kx", mode.kx);
      ms.get("ky", mode.ky);
      ms.get("amplitude", mode.amplitude);
      ms.finish();
      c.initial.modes.push_back(mode);
    }
  }
  ini.get("center_x", c.initial.center_x);
  ini.get("center_y", c.initial.center_y);
  ini.get("width", c.initial.width);
  ini.get("mass", c.initial.mass);
  ini.get("background", c.initial.background);
  ini.get("noise", c.initial.noise);
  ini.finish();
  require(c.initial.kind == "constant" || c.initial.kind == "cosine" || c.initial.kind == "gaussian",
          "initial.kind must be constant, cosine or gaussian");
  require(c.initial.width > 0, "initial.width must be positive");
  require(c.initial.noise >= 0 && c.initial.noise < 1, "initial.noise must lie in [0, 1)");

  Section ev(top.child("evolve"), "evolve");
  ev.get("horizon", c.evolve.horizon);
  ev.get("cadence", c.evolve.cadence);
  ev.get("p", c.evolve.p);
  ev.get("lambda", c.evolve.lambda);
  ev.get("blowup_factor", c.evolve.blowup_factor);
  ev.get("dt_floor", c.evolve.dt_floor);
  ev.get("safety", c.evolve.safety);
  ev.get("dt_max", c.evolve.dt_max);
  ev.get("time_scheme", c.evolve.time_scheme);
  ev.get("flux_scheme", c.evolve.flux_scheme);
  ev.get("clip_tolerance", c.evolve.clip_tolerance);
  ev.finish();
  require(c.evolve.horizon > 0 && c.evolve.cadence > 0, "evolve.horizon and evolve.cadence must be positive");
  require(c.evolve.p > 0, "evolve.p must be positive");
  require(c.evolve.safety > 0 && c.evolve.safety <= 1, "evolve.safety must lie in (0, 1]");
  try {
    time_scheme_from_string(c.evolve.time_scheme);
    flux_scheme_from_string(c.evolve.flux_scheme);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  Section chk(top.child("check"), "check");
  chk.get("n", c.check.n);
  chk.get("eta_mode", c.check.eta_mode);
  chk.get("eta", c.check.eta);
  chk.get("v_max", c.check.v_max);
  chk.get("samples", c.check.samples);
  chk.finish();
  require(c.check.eta_mode == "user" || c.check.eta_mode == "measured", "check.eta_mode must be user or measured");
  require(!c.check.n || *c.check.n >= 1, "check.n must be at least 1");

  Section st(top.child("steady"), "steady");
  st.get("kind", c.steady.kind);
  st.get("k", c.steady.k);
  st.get("m", c.steady.m);
  st.get("chi_eff", c.steady.chi_eff);
  st.get("parameter", c.steady.parameter);
  st.get("start", c.steady.start);
  st.get("stop", c.steady.stop);
  st.get("points", c.steady.points);
  st.get("guess", c.steady.guess);
  st.get("tolerance", c.steady.tolerance);
  st.get("max_log_jump", c.steady.max_log_jump);
  st.finish();
  require(c.steady.kind == "algebraic" || c.steady.kind == "exponential", "steady.kind must be algebraic or exponential");
  require(c.steady.parameter == "d" || c.steady.parameter == "m_tilde", "steady.parameter must be d or m_tilde");
  require(c.steady.points >= 1, "steady.points must be at least 1");
  require(c.steady.guess == "perturbed" || c.steady.guess == "constant" || c.steady.guess == "random",
          "steady.guess must be perturbed, constant or random");

  if (YAML::Node sw = top.child("sweep"); sw && !sw.IsNull()) {
    require(sw.IsSequence(), "sweep must be a list of {key, values}");
    for (const auto& a : sw) {
      SweepAxis axis;
      Section as(a, "sweep[]");
      as.get("key", axis.key);
      as.get("values", axis.values);
      as.finish();
      require(!axis.key.empty(), "sweep axis needs a key");
      c.sweep.push_back(axis);
    }
  }

  Section out(top.child("output"), "output");
  out.get("dir", c.output.dir);
  out.get("snapshot_every", c.output.snapshot_every);
  out.finish();
  require(c.output.snapshot_every >= 0, "output.snapshot_every must be non-negative");

  top.get("seed", c.seed);
  top.get("threads", c.threads);
  require(c.threads >= 1, "threads must be at least 1");
  top.finish();
  return c;
}

YAML::Node to_yaml(const ScenarioConfig& c) {
  YAML::Node root(YAML::NodeType::Map);
  YAML::Node dom = root["domain"];
  dom["shape"] = c.domain.shape;
  dom["length"] = c.domain.length;
  dom["lx"] = c.domain.lx;
  dom["ly"] = c.domain.ly;
  dom["radius"] = c.domain.radius;
  root["resolution"]["nx"] = c.resolution.nx;
  root["resolution"]["ny"] = c.resolution.ny;
  YAML::Node mot = root["motility"];
  const MotilitySpec& m = c.motility;
  mot["family"] = m.family;
  mot["sigma1"] = m.sigma1;
  mot["sigma2"] = m.sigma2;
  mot["lambda1"] = m.lambda1;
  mot["lambda2"] = m.lambda2;
  mot["chi1"] = m.chi1;
  mot["chi2"] = m.chi2;
  mot["delta"] = m.delta;
  mot["sigma"] = m.sigma;
  mot["lambda"] = m.lambda;
  mot["chi"] = m.chi;
  mot["alpha"] = m.alpha;
  mot["gamma"] = m.gamma;
  mot["dgamma"] = m.dgamma;
  mot["phi"] = m.phi;
  mot["dphi"] = m.dphi;
  root["d"] = c.d;
  YAML::Node ini = root["initial"];
  ini["kind"] = c.initial.kind;
  ini["mean"] = c.initial.mean;
  YAML::Node modes(YAML::NodeType::Sequence);
  for (const auto& mode : c.initial.modes) {
    YAML::Node n;
    n["kx"] = mode.kx;
    n["ky"] = mode.ky;
    n["amplitude"] = mode.amplitude;
    modes.push_back(n);
  }
  ini["modes"] = modes;
  ini["center_x"] = c.initial.center_x;
  ini["center_y"] = c.initial.center_y;
  ini["width"] = c.initial.width;
  ini["mass"] = c.initial.mass;
  ini["background"] = c.initial.background;
  ini["noise"] = c.initial.noise;
  YAML::Node ev = root["evolve"];
  ev["horizon"] = c.evolve.horizon;
  ev["cadence"] = c.evolve.cadence;
  ev["p"] = c.evolve.p;
  put_optional(ev, "lambda", c.evolve.lambda);
  ev["blowup_factor"] = c.evolve.blowup_factor;
  ev["dt_floor"] = c.evolve.dt_floor;
  ev["safety"] = c.evolve.safety;
  put_optional(ev, "dt_max", c.evolve.dt_max);
  ev["time_scheme"] = c.evolve.time_scheme;
  ev["flux_scheme"] = c.evolve.flux_scheme;
  ev["clip_tolerance"] = c.evolve.clip_tolerance;
  YAML::Node chk = root["check"];
  put_optional(chk, "n", c.check.n);
  chk["eta_mode"] = c.check.eta_mode;
  put_optional(chk, "eta", c.check.eta);
  chk["v_max"] = c.check.v_max;
  chk["samples"] = c.check.samples;
  YAML::Node st = root["steady"];
  st["kind"] = c.steady.kind;
  put_optional(st, "k", c.steady.k);
  put_optional(st, "m", c.steady.m);
  put_optional(st, "chi_eff", c.steady.chi_eff);
  st["parameter"] = c.steady.parameter;
  st["start"] = c.steady.start;
  st["stop"] = c.steady.stop;
  st["points"] = c.steady.points;
  st["guess"] = c.steady.guess;
  st["tolerance"] = c.steady.tolerance;
  st["max_log_jump"] = c.steady.max_log_jump;
  YAML::Node sweep(YAML::NodeType::Sequence);
  for (const auto& axis : c.sweep) {
    YAML::Node n;
    n["key"] = axis.key;
    n["values"] = axis.values;
    sweep.push_back(n);
  }
  root["sweep"] = sweep;
  root["output"]["dir"] = c.output.dir;
  root["output"]["snapshot_every"] = c.output.snapshot_every;
  root["seed"] = c.seed;
  root["threads"] = c.threads;
  return root;
}

std::string to_yaml_string(const ScenarioConfig& config) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << to_yaml(config);
  return std::string(out.c_str()) + "\n";
}

GridPtr make_grid(const ScenarioConfig& c) {
  try {
    if (c.domain.shape == "interval") return build_grid(Domain::interval(c.domain.length), c.resolution.nx);
    if (c.domain.shape == "rectangle") {
      return build_grid(Domain::rectangle(c.domain.lx, c.domain.ly), c.resolution.nx, c.resolution.ny);
    }
    return build_grid(Domain::disc(c.domain.radius), c.resolution.nx);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

MotilityPair make_motility(const ScenarioConfig& c) {
  const MotilitySpec& m = c.motility;
  try {
    if (m.family == "algebraic") return MotilityPair::algebraic(m.sigma1, m.sigma2, m.lambda1, m.lambda2);
    if (m.family == "exponential") return MotilityPair::exponential(m.chi1, m.chi2, m.delta);
    if (m.family == "ks_algebraic") return MotilityPair::ks_algebraic(m.sigma, m.lambda, m.alpha);
    if (m.family == "ks_exponential") return MotilityPair::ks_exponential(m.chi, m.alpha);
    if (m.gamma.empty() || m.dgamma.empty() || m.phi.empty() || m.dphi.empty()) {
      throw ConfigError("custom motility needs gamma, dgamma, phi and dphi expressions");
    }
    CustomParams p{compile_expression(m.gamma), compile_expression(m.dgamma), compile_expression(m.phi),
                   compile_expression(m.dphi), "gamma=" + m.gamma + ", phi=" + m.phi};
    return MotilityPair::custom(std::move(p));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("motility: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("motility: ") + e.what());
  }
}

Field make_initial(const ScenarioConfig& c, const GridPtr& grid) {
  const InitialSpec& ini = c.initial;
  const Domain& dom = grid->domain();
  const double pi = std::numbers::pi;
  std::vector<double> u(grid->size());
  if (ini.kind == "constant") {
    std::fill(u.begin(), u.end(), ini.mean);
  } else if (ini.kind == "cosine") {
    const double lx = dom.extent(0);
    const double ly = dom.shape() == Shape::rectangle ? dom.extent(1) : 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Point p = grid->center(i);
      double s = 1.0;
      for (const auto& mode : ini.modes) {
        double term = mode.amplitude * std::cos(mode.kx * pi * p.x / lx);
        if (dom.shape() == Shape::rectangle) term *= std::cos(mode.ky * pi * p.y / ly);
        s += term;
      }
      u[i] = ini.mean * s;
    }
  } else {
    std::vector<double> bump(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Point p = grid->center(i);
      const double dx = p.x - ini.center_x;
      const double dy = dom.shape() == Shape::rectangle ? p.y - ini.center_y : 0.0;
      bump[i] = std::exp(-(dx * dx + dy * dy) / (2.0 * ini.width * ini.width));
    }
    const double total = integrate(*grid, bump);
    require(total > 0.0, "gaussian bump is not resolved by the grid");
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = ini.background + ini.mass * bump[i] / total;
  }
  if (ini.noise > 0.0) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (double& x : u) x *= 1.0 + ini.noise * unit(rng);
  }
  for (double x : u) require(std::isfinite(x) && x >= 0.0, "initial condition must be non-negative");
  Field f(grid, std::move(u));
  require(integrate(f) > 0.0, "initial condition must have positive mass");
  return f;
}

EvolveConfig make_evolve_config(const ScenarioConfig& c) {
  EvolveConfig e;
  e.horizon = c.evolve.horizon;
  e.cadence = c.evolve.cadence;
  e.p = c.evolve.p;
  e.lambda = c.evolve.lambda;
  e.blowup_factor = c.evolve.blowup_factor;
  e.dt_floor = c.evolve.dt_floor;
  e.safety = c.evolve.safety;
  e.dt_max = c.evolve.dt_max;
  e.time_scheme = time_scheme_from_string(c.evolve.time_scheme);
  e.flux_scheme = flux_scheme_from_string(c.evolve.flux_scheme);
  e.clip_tolerance = c.evolve.clip_tolerance;
  return e;
}

}  // namespace kslab::cli
