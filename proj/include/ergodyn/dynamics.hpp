#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergodyn/objective.hpp"
#include "ergodyn/param_vector.hpp"
#include "ergodyn/rng.hpp"

namespace ergodyn {

enum class SamplingMode { iid, epoch_shuffle, full_batch };

SamplingMode parse_sampling(const std::string& s);
std::string to_string(SamplingMode m);

struct Schedule {
  enum class Kind { constant, stage_decay, cosine };
  Kind kind = Kind::constant;
  double eta0 = 0.1;
  double factor = 10.0;           // stage_decay
  std::size_t period_epochs = 30; // stage_decay
  std::size_t total_steps = 1;    // cosine

  static Schedule constant(double eta) { return {Kind::constant, eta}; }
  static Schedule stage_decay(double eta, double factor, std::size_t period_epochs) {
    return {Kind::stage_decay, eta, factor, period_epochs};
  }
  static Schedule cosine(double eta, std::size_t total_steps) { return {Kind::cosine, eta, 10.0, 30, total_steps}; }
};

std::string to_string(Schedule::Kind k);
Schedule::Kind parse_schedule_kind(const std::string& s);

/// Step size at `step` (0-based). Stage decay divides by `factor` at every
/// `period_epochs` boundary; cosine is eta0 (1 + cos(pi t / T)) / 2 with t
/// clamped to T.
double schedule_eta(const Schedule& schedule, std::size_t step, std::size_t steps_per_epoch);

/// F(theta) = theta - eta (g_B(theta) + gamma theta) with g_B the minibatch
/// gradient of the base loss.
struct UpdateMap {
  ObjectivePtr objective;
  double step_size = 0.1;
  double weight_decay = 0.0;
  std::size_t batch_size = 0;  ///< 0 or >= N means full batch
  SamplingMode sampling = SamplingMode::iid;
  std::uint64_t seed = 0;

  std::size_t effective_batch() const;
  bool deterministic() const;
  std::size_t steps_per_epoch() const;
};

/// Draws minibatch index sets. iid samples with replacement; epoch_shuffle
/// walks a fresh permutation each epoch (the last batch of an epoch is short
/// when m does not divide N); full_batch always returns 0..N-1.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t num_examples, std::size_t batch_size, SamplingMode mode, std::uint64_t seed);
  MinibatchSampler(const UpdateMap& map, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t steps_per_epoch() const;

 private:
  std::size_t n_, m_;
  SamplingMode mode_;
  Rng rng_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

struct StepRecord {
  std::size_t step = 0;
  double eta = 0.0;
  std::vector<std::size_t> batch;
  double batch_loss = 0.0;  ///< base (unregularized) minibatch loss at theta_step
};

struct StepResult {
  ParamVector next;
  StepRecord record;
  bool finite = true;
};

/// Deterministic part of the update given a batch.
StepResult apply_update(const UpdateMap& map, const ParamVector& theta, std::vector<std::size_t> batch, double eta);
/// One stochastic step with the map's step size and a batch from `sampler`.
StepResult sgd_step(const UpdateMap& map, const ParamVector& theta, MinibatchSampler& sampler);
StepResult sgd_step(const UpdateMap& map, const ParamVector& theta, MinibatchSampler& sampler, double eta);

inline constexpr double kDivergenceNorm = 1e12;

struct Trajectory {
  std::vector<ParamVector> iterates;
  std::vector<std::size_t> iterate_steps;
  std::vector<StepRecord> records;
  std::uint64_t seed = 0;
  std::string objective;
  std::size_t stride = 1;
  SamplingMode sampling = SamplingMode::iid;
  std::size_t batch_size = 0;
  std::size_t steps_per_epoch = 1;
  double weight_decay = 0.0;
  bool diverged = false;
  std::string divergence_reason;

  std::size_t num_steps() const { return records.size(); }
  bool has_step(std::size_t step) const;
  /// Iterate after `step` updates; throws InvalidInput if it was not stored.
  const ParamVector& at_step(std::size_t step) const;
  const ParamVector& final_iterate() const { return iterates.back(); }
};

/// Stride 1 for dim <= 1e3 and num_steps <= 1e5, otherwise the smallest stride
/// storing at most 1e5 iterates.
std::size_t default_stride(std::size_t dim, std::size_t num_steps);

/// Applies num_steps updates with eta from `schedule`, storing theta_0, every
/// stride-th iterate and the final iterate. Stops early (diverged = true) on a
/// non-finite value or ||theta|| > 1e12.
Trajectory run_trajectory(const UpdateMap& map, const Schedule& schedule, const ParamVector& theta0,
                          std::size_t num_steps, std::size_t stride = 0);

/// Smallest p <= max_period with ||theta_{t+p} - theta_t|| <= tol over the last
/// `tail` stored iterates (stride must be 1), if any.
std::optional<std::size_t> orbit_period(const Trajectory& traj, std::size_t max_period, double tol, std::size_t tail);

}  // namespace ergodyn
