#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergodyn/config.hpp"
#include "ergodyn/dataset.hpp"
#include "ergodyn/diagnostics.hpp"
#include "ergodyn/dynamics.hpp"
#include "ergodyn/mlp.hpp"

namespace ergodyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Everything needed to run the dynamics described by a config.
struct ModelSetup {
  std::string objective_kind;
  std::shared_ptr<const Dataset> data;  ///< null for closed-form objectives
  std::optional<MlpSpec> spec;
  ObjectivePtr objective;  ///< base (unregularized) loss
  UpdateMap map;
  Schedule schedule;
  ParamVector theta0;
  std::size_t steps = 0;
  std::size_t stride = 1;
};

BlobsSpec blobs_spec(const ExperimentConfig& cfg);
/// "blobs" (default) generates a dataset; anything else is read as a CSV path,
/// resolved against the config file's directory when relative.
std::shared_ptr<const Dataset> load_dataset(const ExperimentConfig& cfg);
ModelSetup build_model(const ExperimentConfig& cfg);

/// Writes a blobs dataset as CSV.
void generate_dataset(const BlobsSpec& spec, const std::filesystem::path& path);

/// Headline numbers of a finished run, used for sweep aggregation.
struct RunSummary {
  int exit_code = kExitOk;
  std::string status = "ok";
  std::optional<DiagnosticsRecord> final_record;
  double tail_loss = 0.0;       ///< mean over the last 10% of diagnostics rows
  double tail_grad_norm = 0.0;
  std::size_t steps_run = 0;
};

/// Runs the experiment named by the `experiment` key and writes its artifacts
/// under `out_dir`. Human-readable output goes to `out`, problems to `err`.
/// Returns 0 on success (or a passing / not-applicable check), 1 on a failed
/// check or divergence, 2 on a configuration or precondition error.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
/// Same, also returning the run summary.
RunSummary run_experiment_summary(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Loads `path`, applies `overrides` in order and runs it.
int run_experiment_file(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& out,
                        std::ostream& err);

}  // namespace ergodyn
