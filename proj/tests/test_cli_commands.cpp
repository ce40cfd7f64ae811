#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path scratch = fs::temp_directory_path() / "kslab_cli_tests";

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Runs the kslab executable with `args`, optionally prefixed by environment
// assignments, and captures both streams.
Invocation kslab(const std::string& args, const std::string& env = "") {
  fs::create_directories(scratch);
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + KSLAB_EXE + "\" " + args + " > \"" + out.string() +
                          "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Invocation r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string config(const std::string& name) { return "--config \"" + std::string(KSLAB_CONFIG_DIR) + "/" + name + "\""; }

fs::path fresh(const std::string& name) {
  const fs::path p = scratch / name;
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(scratch);
  const fs::path p = scratch / name;
  std::ofstream(p) << text;
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream is(p);
  for (std::string line; std::getline(is, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const char* kLattice = R"(
domain: {shape: interval, length: 1.0}
resolution: {nx: 32}
motility: {family: ks_exponential, chi: 1.0, alpha: 0.5}
initial:
  kind: cosine
  mean: 1.0
  modes: [{kx: 1, ky: 0, amplitude: 0.2}]
evolve: {horizon: 0.2, cadence: 0.05}
sweep:
  - {key: mass, values: [0.5, 1.0, 2.0]}
  - {key: d, values: [0.5, 1.0, 2.0]}
threads: 3
)";

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(kslab("").code == 1);
  CHECK(kslab("simulate").code == 1);
  CHECK(kslab("simulate --config /nonexistent/file.yaml").code == 1);
  CHECK(kslab("frobnicate " + config("constant_1d.yaml")).code == 1);
  CHECK(kslab("simulate " + config("constant_1d.yaml") + " --threads abc").code == 1);
  const fs::path bad = write_config("bad.yaml", "d: [1, 2]\n");
  CHECK(kslab("simulate --config " + bad.string()).code == 1);
  CHECK(kslab("--help").code == 0);
}

TEST_CASE("simulate: constant initial data") {
  const fs::path out = fresh("constant");
  const Invocation r = kslab("simulate " + config("constant_1d.yaml") + " --out " + out.string());
  CHECK(r.code == 0);
  const auto rows = read_csv(out / "trajectory.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0].front() == "t");
  for (std::size_t i = 2; i < rows.size(); ++i) {
    // Every column after t matches the first record.
    for (std::size_t c = 1; c < rows[1].size(); ++c) CHECK(rows[i][c] == rows[1][c]);
  }
  const auto summary = read_json(out / "summary.json");
  CHECK(summary["outcome"] == "completed");
  CHECK(summary["final_mass"].get<double>() == doctest::Approx(2.0));
  CHECK(summary.contains("measured_eta"));
  CHECK(summary.contains("linf_plateau"));
  CHECK(fs::exists(out / "snapshots"));
}

TEST_CASE("simulate: subcritical 2D run completes") {
  const fs::path out = fresh("subcritical");
  CHECK(kslab("simulate " + config("subcritical_2d.yaml") + " --out " + out.string()).code == 0);
  CHECK(read_json(out / "summary.json")["outcome"] == "completed");
}

TEST_CASE("simulate: supercritical bump is flagged") {
  const fs::path out = fresh("supercritical");
  const Invocation r = kslab("simulate " + config("supercritical_bump.yaml") + " --out " + out.string());
  CHECK(r.code == 2);
  const auto summary = read_json(out / "summary.json");
  CHECK(summary["outcome"] == "blowup_suspected");
  CHECK(summary["t_star"].get<double>() > 0.0);
  CHECK(summary["t_star"].get<double>() < 1.0);
}

TEST_CASE("simulate: runtime failure exits 3") {
  const fs::path cfg = write_config("runtime.yaml", R"(
domain: {shape: interval, length: 1.0}
resolution: {nx: 64}
motility: {family: exponential, chi1: 0.01, chi2: 0.01, delta: 5.0}
d: 0.01
initial:
  kind: cosine
  mean: 1.0
  modes: [{kx: 5, ky: 0, amplitude: 0.99}]
evolve: {horizon: 0.5, safety: 1.0, clip_tolerance: 1.0e-14}
)");
  const Invocation r = kslab("simulate --config " + cfg.string() + " --out " + fresh("runtime").string());
  CHECK(r.code == 3);
  CHECK(r.err.find("positivity") != std::string::npos);
}

TEST_CASE("check: pass, fail with witness, invalid custom pair") {
  const Invocation pass = kslab("check " + config("check_algebraic_pass.yaml") + " --out " + fresh("chk1").string());
  CHECK(pass.code == 0);
  const auto report = nlohmann::json::parse(pass.out);
  CHECK(report["all_applicable_pass"] == true);
  CHECK(fs::exists(scratch / "chk1" / "hypotheses.json"));

  const Invocation fail = kslab("check " + config("check_ks_algebraic_fail.yaml") + " --out " + fresh("chk2").string());
  CHECK(fail.code == 2);
  CHECK(fail.err.find("FAIL thm23_i") != std::string::npos);
  CHECK(fail.err.find("witness 2.5 vs bound 2") != std::string::npos);

  // Same pair with lambda = 1.5 passes thm23_i for n = 3.
  const Invocation ok = kslab("check " + config("check_ks_algebraic_fail.yaml") + " --out " + fresh("chk3").string(),
                              "KSLAB_MOTILITY__LAMBDA=1.5");
  const auto conditions = nlohmann::json::parse(ok.out)["conditions"];
  for (const auto& c : conditions) {
    if (c["name"] == "thm23_i") CHECK(c["pass"] == true);
  }

  CHECK(kslab("check " + config("custom_missing_derivative.yaml") + " --out " + fresh("chk4").string()).code == 1);
}

TEST_CASE("check: flags override the config") {
  const Invocation r =
      kslab("check " + config("check_algebraic_pass.yaml") + " --n 5 --out " + fresh("chk5").string());
  CHECK(r.code == 2);
  CHECK(nlohmann::json::parse(r.out)["inputs"]["n"] == 5);
  const Invocation measured = kslab("check " + config("constant_1d.yaml") + " --eta-mode measured --out " +
                                    fresh("chk6").string(), "KSLAB_EVOLVE__HORIZON=0.05");
  CHECK(measured.code == 0);
  const auto inputs = nlohmann::json::parse(measured.out)["inputs"];
  CHECK(inputs["eta_mode"] == "measured");
  CHECK(inputs["eta"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("steady: k = 2 branch departs near (k - 1)/pi^2") {
  const fs::path out = fresh("steady_k2");
  const Invocation r = kslab("steady " + config("steady_k2.yaml") + " --out " + out.string());
  CHECK(r.code == 0);
  const auto summary = read_json(out / "steady.json");
  REQUIRE(summary["threshold_interval"].is_array());
  CHECK(summary["threshold_interval"][0].get<double>() >= 0.09);
  CHECK(summary["threshold_interval"][1].get<double>() <= 0.11 + 1e-12);
  const auto rows = read_csv(out / "branch.csv");
  CHECK(rows.size() == 15);
  CHECK(rows[0] == std::vector<std::string>{"parameter", "amplitude", "residual", "max_v", "min_v", "theta"});
  CHECK(fs::exists(out / "steady_v.csv"));
  CHECK(fs::exists(out / "steady_u.csv"));
}

TEST_CASE("steady: k = 0.8 branch is flat") {
  const fs::path out = fresh("steady_k08");
  CHECK(kslab("steady " + config("steady_k08.yaml") + " --out " + out.string()).code == 0);
  const auto rows = read_csv(out / "branch.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][1]) - 1.0) <= 1e-6);
}

TEST_CASE("steady: disc crossing near 8 pi d") {
  const fs::path out = fresh("steady_disc");
  CHECK(kslab("steady " + config("steady_disc.yaml") + " --out " + out.string()).code == 0);
  const auto summary = read_json(out / "steady.json");
  REQUIRE(summary["threshold_estimate"].is_number());
  const double ratio = summary["threshold_estimate"].get<double>() / (8.0 * M_PI);
  CHECK(ratio > 0.9);
  CHECK(ratio < 1.1);
}

TEST_CASE("steady: Newton failure at the first point exits 2") {
  const Invocation r = kslab("steady " + config("steady_disc.yaml") + " --out " + fresh("steady_fail").string(),
                             "KSLAB_STEADY__POINTS=1 KSLAB_STEADY__START=300 KSLAB_STEADY__STOP=300");
  CHECK(r.code == 2);
  CHECK(r.err.find("Newton") != std::string::npos);
}

TEST_CASE("sweep: 3x3 subcritical lattice") {
  const fs::path cfg = write_config("lattice.yaml", kLattice);
  const fs::path out = fresh("lattice");
  CHECK(kslab("sweep --config " + cfg.string() + " --out " + out.string()).code == 0);
  const auto rows = read_csv(out / "sweep.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"mass", "d", "outcome", "linf_plateau"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][2] == "completed");
  CHECK(rows[1][0] == "0.5");
  CHECK(rows[1][1] == "0.5");
  CHECK(rows[2][1] == "1");
}

TEST_CASE("sweep: empty lattice exits 1") {
  const fs::path cfg = write_config("empty_sweep.yaml", "domain: {shape: interval}\nresolution: {nx: 16}\n");
  CHECK(kslab("sweep --config " + cfg.string() + " --out " + fresh("empty").string()).code == 1);
  const fs::path cfg2 = write_config("empty_axis.yaml", "sweep: [{key: d, values: []}]\n");
  CHECK(kslab("sweep --config " + cfg2.string() + " --out " + fresh("empty2").string()).code == 1);
}

TEST_CASE("sweep: outcome flips across the critical mass") {
  const fs::path out = fresh("sweep_mass");
  CHECK(kslab("sweep " + config("sweep_mass.yaml") + " --out " + out.string()).code == 0);
  const auto rows = read_csv(out / "sweep.csv");
  REQUIRE(rows.size() == 7);
  CHECK(rows[1][1] == "completed");
  CHECK(rows.back()[1] == "blowup_suspected");
  // Monotone: once flagged, larger masses stay flagged.
  bool flagged = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool now = rows[i][1] == "blowup_suspected";
    CHECK_FALSE((flagged && !now));
    flagged = flagged || now;
  }
}

TEST_CASE("determinism") {
  const std::string noisy = std::string(KSLAB_CONFIG_DIR) + "/constant_1d.yaml";
  const std::string env = "KSLAB_INITIAL__NOISE=0.2 KSLAB_EVOLVE__HORIZON=0.2";
  const fs::path a = fresh("det_a"), b = fresh("det_b"), c = fresh("det_c");
  CHECK(kslab("simulate --config " + noisy + " --seed 7 --out " + a.string(), env).code == 0);
  CHECK(kslab("simulate --config " + noisy + " --seed 7 --out " + b.string(), env).code == 0);
  CHECK(kslab("simulate --config " + noisy + " --seed 8 --out " + c.string(), env).code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "snapshots" / "u_final.csv") == slurp(b / "snapshots" / "u_final.csv"));
  CHECK(slurp(a / "trajectory.csv") != slurp(c / "trajectory.csv"));

  const std::string rnd = "KSLAB_STEADY__GUESS=random KSLAB_STEADY__POINTS=1 KSLAB_STEADY__START=0.05";
  const fs::path s1 = fresh("det_s1"), s2 = fresh("det_s2");
  CHECK(kslab("steady " + config("steady_k2.yaml") + " --seed 3 --out " + s1.string(), rnd).code == 0);
  CHECK(kslab("steady " + config("steady_k2.yaml") + " --seed 3 --out " + s2.string(), rnd).code == 0);
  CHECK(slurp(s1 / "branch.csv") == slurp(s2 / "branch.csv"));
  CHECK(slurp(s1 / "steady_v.csv") == slurp(s2 / "steady_v.csv"));

  const fs::path cfg = write_config("lattice.yaml", kLattice);
  const fs::path w1 = fresh("det_w1"), w2 = fresh("det_w2");
  CHECK(kslab("sweep --config " + cfg.string() + " --threads 1 --out " + w1.string()).code == 0);
  CHECK(kslab("sweep --config " + cfg.string() + " --threads 4 --out " + w2.string()).code == 0);
  CHECK(slurp(w1 / "sweep.csv") == slurp(w2 / "sweep.csv"));
}

TEST_CASE("reference config is the full default set") {
  const Invocation r = kslab("reference-config");
  CHECK(r.code == 0);
  CHECK(r.out == slurp(fs::path(KSLAB_CONFIG_DIR) / "reference.yaml"));
  const fs::path cfg = write_config("reference_copy.yaml", r.out);
  const fs::path out = fresh("reference_run");
  CHECK(kslab("simulate --config " + cfg.string() + " --out " + out.string(), "KSLAB_EVOLVE__HORIZON=0.05").code == 0);
}
