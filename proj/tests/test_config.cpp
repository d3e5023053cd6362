#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergodyn/config.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/experiment.hpp"
#include "ergodyn/plot.hpp"

using namespace ergodyn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "ergodyn_config_test" / name;
  fs::remove_all(p);
  return p;
}

int run(const std::string& text, const fs::path& out, std::string* err_text = nullptr) {
  ExperimentConfig cfg = ExperimentConfig::parse(text);
  cfg.set("out_dir", out.string());
  std::ostringstream o, e;
  const int code = run_experiment(cfg, o, e);
  if (err_text) *err_text = e.str();
  return code;
}

const char* kMlp = R"(
objective = mlp
widths = 2,6,3
activations = relu
blobs_classes = 3
blobs_per_class = 10
eta0 = 0.2
gamma = 0.01
batch_size = 5
sampling = epoch_shuffle
steps = 60
stride = 1
diag_every = 5
seed = 4
)";

}  // namespace

TEST_CASE("parsing with comments and whitespace") {
  const auto cfg = ExperimentConfig::parse("# header\n  eta0 = 0.5   # trailing\n\nwidths=2, 4 ,3\nsave_trajectory = yes\n");
  CHECK(cfg.get_double("eta0", 0.0) == 0.5);
  CHECK(cfg.get_sizes("widths", {}) == std::vector<std::size_t>{2, 4, 3});
  CHECK(cfg.get_bool("save_trajectory", false));
  CHECK(cfg.get_double("gamma", 0.25) == 0.25);
  CHECK(cfg.text().find("# header") != std::string::npos);
}

TEST_CASE("unknown, duplicate and malformed entries are rejected") {
  try {
    ExperimentConfig::parse("etaa=0.1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'etaa'") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::parse("eta0 = 1\neta0 = 2\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("just some words\n"), ConfigError);
  const auto cfg = ExperimentConfig::parse("eta0 = fast\nsteps = -3\nsharpness = maybe\n");
  CHECK_THROWS_AS(cfg.get_double("eta0", 0.0), ConfigError);
  CHECK_THROWS_AS(cfg.get_size("steps", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("sharpness", false), ConfigError);
}

TEST_CASE("config round trip into metadata") {
  const fs::path out = scratch("meta");
  REQUIRE(run(kMlp, out) == 0);
  const auto meta = nlohmann::json::parse(slurp(out / "metadata.json"));
  CHECK(meta["config"]["text"] == kMlp);
  CHECK(meta["config"]["values"]["widths"] == "2,6,3");
  CHECK(meta["dataset"]["input_scale"].get<double>() > 0.0);
  CHECK(fs::exists(out / "diagnostics.csv"));
}

TEST_CASE("unknown key in a run exits with code 2") {
  const fs::path dir = scratch("badkey");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "objective = sin_product\netaa=0.1\n";
  }
  std::ostringstream o, e;
  CHECK(run_experiment_file(dir / "bad.cfg", {}, o, e) == 2);
  CHECK(e.str().find("etaa") != std::string::npos);
}

TEST_CASE("semantic config errors exit with code 2") {
  std::string err;
  CHECK(run("objective = mlp\nwidths = 3,4,3\n", scratch("dims"), &err) == 2);
  CHECK(err.find("widths") != std::string::npos);
  CHECK(run("objective = nonsense\n", scratch("obj")) == 2);
  CHECK(run("experiment = measure\nobjective = sin_product\nstride = 3\n", scratch("stride")) == 2);
  CHECK(run("experiment = theorem\ntheorem = compact\nwidths = 2,8,4\n", scratch("thm")) == 2);
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  const std::string text = std::string(kMlp) + "experiment = diagnose\nsave_trajectory = true\n";
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run(text, a) == 0);
  REQUIRE(run(text, b) == 0);
  for (const char* f : {"metadata.json", "diagnostics.csv", "epoch.csv", "trajectory/trajectory.bin",
                        "trajectory/records.csv", "trajectory/trajectory.json"}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  const fs::path c = scratch("det_c");
  REQUIRE(run(text + "", c) == 0);
  ExperimentConfig other = ExperimentConfig::parse(text);
  other.set("seed", "5");
  other.set("out_dir", (scratch("det_d")).string());
  std::ostringstream o;
  REQUIRE(run_experiment(other, o, o) == 0);
  CHECK(slurp(scratch("det_d").parent_path() / "det_d" / "diagnostics.csv") != slurp(a / "diagnostics.csv"));
}

TEST_CASE("single-value sweep reproduces the direct run") {
  const fs::path direct = scratch("direct"), sweep = scratch("sweep");
  REQUIRE(run(std::string(kMlp) + "experiment = diagnose\n", direct) == 0);
  REQUIRE(run(std::string(kMlp) + "experiment = sweep\nsweep_axis = eta\nsweep_values = 0.2\n", sweep) == 0);
  CHECK(slurp(direct / "diagnostics.csv") == slurp(sweep / "eta_0.2" / "diagnostics.csv"));
  const std::string agg = slurp(sweep / "sweep.csv");
  CHECK(agg.rfind("axis,value,exit_code", 0) == 0);
  CHECK(agg.find("eta,0.2,0,ok") != std::string::npos);
}

TEST_CASE("sweep records failing sub-runs and continues") {
  const fs::path out = scratch("sweep_fail");
  const std::string text = "experiment = sweep\nobjective = quadratic\nquadratic_diag = 1\ninit = point\n"
                           "init_point = 1\nsteps = 100\nstride = 1\nsweep_axis = eta\nsweep_values = 0.5,3.0,1.0\n"
                           "sweep_experiment = simulate\nworkers = 2\n";
  CHECK(run(text, out) == 1);
  const std::string agg = slurp(out / "sweep.csv");
  CHECK(agg.find("eta,0.5,0,ok") != std::string::npos);
  CHECK(agg.find("eta,3.0,1,diverged") != std::string::npos);
  CHECK(agg.find("eta,1.0,0,ok") != std::string::npos);
  CHECK(run("experiment = sweep\nsweep_axis = eta\n", scratch("sweep_empty")) == 2);
}

TEST_CASE("divergence exits 1 and flags truncated artifacts") {
  const fs::path out = scratch("diverge");
  CHECK(run("objective = quadratic\nquadratic_diag = 1\neta0 = 3\nsteps = 500\n", out) == 1);
  const auto meta = nlohmann::json::parse(slurp(out / "metadata.json"));
  CHECK(meta["trajectory"]["diverged"] == true);
  CHECK(meta["trajectory"]["truncated"] == true);
  CHECK(meta["exit_code"] == 1);
}

TEST_CASE("theorem checkers write reports") {
  const fs::path out = scratch("celemma");
  CHECK(run("experiment = theorem\ntheorem = celemma\nce_trials = 500\n", out) == 0);
  const auto rep = nlohmann::json::parse(slurp(out / "celemma_report.json"));
  CHECK(rep["verdict"] == "PASS");
}

TEST_CASE("measure experiment artifacts") {
  const fs::path out = scratch("measure");
  REQUIRE(run("experiment = measure\nobjective = sin_product\neta0 = 0.04\nsteps = 400\nstride = 1\n"
              "n_grid = 10,100\nresamples = 2\n",
              out) == 0);
  const std::string csv = slurp(out / "vanishing_change.csv");
  CHECK(csv.rfind("n,delta,envelope\n10,", 0) == 0);
  const auto rep = nlohmann::json::parse(slurp(out / "measure_report.json"));
  CHECK(rep["vanishing_change"]["deterministic"] == true);
  CHECK(rep["vanishing_change"]["telescoping_residual"].get<double>() <= 1e-12);
}

TEST_CASE("plotting writes one SVG per numeric column") {
  const fs::path out = scratch("plot");
  REQUIRE(run(std::string(kMlp) + "experiment = diagnose\n", out) == 0);
  const auto files = plot_csv(out / "diagnostics.csv", out / "svg");
  CHECK(files.size() == 8);
  const std::string svg = slurp(files.front());
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
}
