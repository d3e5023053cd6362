#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ergodyn/dynamics.hpp"
#include "ergodyn/linalg.hpp"
#include "ergodyn/objective.hpp"

namespace ergodyn {

/// One row of trajectory statistics. loss, grad_norm and noise follow the
/// per-dataset definitions over `sample_size` examples.
struct DiagnosticsRecord {
  std::size_t step = 0;
  double eta = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double noise = 0.0;
  double sharpness = std::numeric_limits<double>::quiet_NaN();  ///< signed dominant Hessian eigenvalue
  double g2 = 0.0;  ///< second moment of the stochastic gradient
  std::size_t sample_size = 0;
  /// Mean squared per-example gradient norm over the sample.
  double mean_sq_example_grad = 0.0;
};

/// Loss, gradient norm and noise over `sample` (all examples when empty).
/// g2 is the second moment of a size-`batch_size` with-replacement minibatch
/// gradient, ||grad||^2 + noise^2 / batch_size (per-example when batch_size <= 1).
DiagnosticsRecord full_quantities(const Objective& obj, const ParamVector& theta, Batch sample = {},
                                  std::size_t batch_size = 1);

/// Same on a random subsample of `sample_size` distinct examples; exact when
/// sample_size equals N.
DiagnosticsRecord full_quantities(const Objective& obj, const ParamVector& theta, std::size_t sample_size, Rng& rng,
                                  std::size_t batch_size = 1);

struct SharpnessOptions {
  double tol = 1e-6;
  int max_iters = 200;
  std::uint64_t seed = 0;
  double hvp_eps = kDefaultHvpEps;
};

/// Power iteration on finite-difference Hessian-vector products over `batch`
/// (all examples when empty).
PowerIterationResult sharpness(const Objective& obj, const ParamVector& theta, Batch batch = {},
                               const SharpnessOptions& opts = {});

/// ||grad||^2 / (eta * |sharpness| * g2); empty when the denominator is zero
/// or not finite.
std::optional<double> eos_ratio(const DiagnosticsRecord& record);

struct EpochLossPair {
  std::size_t epoch = 0;
  double moving = 0.0;  ///< mean of the recorded minibatch losses over the epoch
  double fixed = 0.0;   ///< full-batch loss at the epoch's last iterate
};

/// Requires epoch-shuffle (or full-batch) sampling and the epoch's final
/// iterate to be stored.
EpochLossPair epoch_losses(const Trajectory& traj, const Objective& obj, std::size_t epoch);

struct PrecisionRow {
  std::size_t sample_size = 0;
  double loss_mean = 0.0, loss_sd = 0.0;
  double grad_norm_mean = 0.0, grad_norm_sd = 0.0;
  double noise_mean = 0.0, noise_sd = 0.0;
  std::size_t resamples = 0;
};

/// Estimator precision versus sample size: for each size, mean and standard
/// deviation of the subsampled estimates over `resamples` draws.
std::vector<PrecisionRow> precision_sweep(const Objective& obj, const ParamVector& theta,
                                          const std::vector<std::size_t>& sizes, std::size_t resamples,
                                          std::uint64_t seed);

/// "step,eta,loss,grad_norm,noise,sharpness,g2,eos_ratio,sample_size"
std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const DiagnosticsRecord& r);

}  // namespace ergodyn
