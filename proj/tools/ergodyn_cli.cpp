#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "ergodyn/config.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/experiment.hpp"
#include "ergodyn/plot.hpp"

namespace fs = std::filesystem;
using namespace ergodyn;

int main(int argc, char** argv) {
  CLI::App app{"ergodyn: SGD as a dynamical system, time averages and theorem checks"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  app.add_option("--config", config_path, "Run configuration file (key = value)");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out, "Output directory (for gen-data: output CSV file)");
  app.add_option("--workers", workers, "Concurrent sweep sub-runs");

  std::vector<std::pair<std::string, CLI::App*>> runs;
  for (const char* name : {"simulate", "diagnose", "measure", "sweep"}) {
    runs.emplace_back(name, app.add_subcommand(name, std::string("Run the '") + name + "' experiment"));
  }
  auto* theorem = app.add_subcommand("theorem", "Run a theorem checker");
  std::string which;
  theorem->add_option("name", which, "compact | bn | smallerstep | celemma")
      ->required()
      ->check(CLI::IsMember({"compact", "bn", "smallerstep", "celemma"}));

  auto* gen = app.add_subcommand("gen-data", "Write a Gaussian-blobs dataset as CSV");
  BlobsSpec blobs;
  blobs.num_classes = 4;
  blobs.per_class = 128;
  gen->add_option("--classes", blobs.num_classes, "Number of classes d")->check(CLI::Range(2, 1 << 20));
  gen->add_option("--dim", blobs.input_dim, "Input dimension d0")->check(CLI::PositiveNumber);
  gen->add_option("--per-class", blobs.per_class, "Examples per class")->check(CLI::PositiveNumber);
  gen->add_option("--separation", blobs.separation, "Distance of class centres from the origin");

  auto* plot = app.add_subcommand("plot", "One SVG per numeric column of a CSV");
  std::string csv_path;
  plot->add_option("csv", csv_path, "Diagnostics CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  if (seed) overrides.emplace_back("seed", std::to_string(*seed));
  if (out) overrides.emplace_back("out_dir", *out);
  if (workers) overrides.emplace_back("workers", std::to_string(*workers));

  try {
    for (const auto& [name, sub] : runs) {
      if (!sub->parsed()) continue;
      if (config_path.empty()) {
        std::cerr << "error: " << name << " needs --config <path>\n";
        return kExitUsage;
      }
      overrides.insert(overrides.begin(), {"experiment", name});
      return run_experiment_file(config_path, overrides, std::cout, std::cerr);
    }
    if (theorem->parsed()) {
      ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
      cfg.set("experiment", "theorem");
      cfg.set("theorem", which);
      for (const auto& [k, v] : overrides) cfg.set(k, v);
      return run_experiment(cfg, std::cout, std::cerr);
    }
    if (gen->parsed()) {
      if (!config_path.empty()) {
        const BlobsSpec from_cfg = blobs_spec(ExperimentConfig::load(config_path));
        if (gen->count("--classes") == 0) blobs.num_classes = from_cfg.num_classes;
        if (gen->count("--dim") == 0) blobs.input_dim = from_cfg.input_dim;
        if (gen->count("--per-class") == 0) blobs.per_class = from_cfg.per_class;
        if (gen->count("--separation") == 0) blobs.separation = from_cfg.separation;
        blobs.seed = from_cfg.seed;
      }
      if (seed) blobs.seed = *seed;
      const fs::path path = out.value_or("blobs.csv");
      generate_dataset(blobs, path);
      std::cout << "wrote " << path.string() << "\n";
      return kExitOk;
    }
    if (plot->parsed()) {
      const fs::path dir = out ? fs::path(*out) : fs::path(csv_path).parent_path();
      for (const auto& f : plot_csv(csv_path, dir.empty() ? fs::path(".") : dir)) std::cout << "wrote " << f.string() << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
