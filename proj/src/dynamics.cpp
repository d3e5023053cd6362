#include "ergodyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"

namespace ergodyn {

SamplingMode parse_sampling(const std::string& s) {
  if (s == "iid") return SamplingMode::iid;
  if (s == "epoch_shuffle") return SamplingMode::epoch_shuffle;
  if (s == "full_batch" || s == "full") return SamplingMode::full_batch;
  throw ConfigError("unknown sampling mode '" + s + "' (expected iid, epoch_shuffle or full_batch)");
}

std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::iid: return "iid";
    case SamplingMode::epoch_shuffle: return "epoch_shuffle";
    case SamplingMode::full_batch: return "full_batch";
  }
  return "?";
}

std::string to_string(Schedule::Kind k) {
  switch (k) {
    case Schedule::Kind::constant: return "constant";
    case Schedule::Kind::stage_decay: return "stage_decay";
    case Schedule::Kind::cosine: return "cosine";
  }
  return "?";
}

Schedule::Kind parse_schedule_kind(const std::string& s) {
  if (s == "constant") return Schedule::Kind::constant;
  if (s == "stage_decay" || s == "stage") return Schedule::Kind::stage_decay;
  if (s == "cosine") return Schedule::Kind::cosine;
  throw ConfigError("unknown schedule '" + s + "' (expected constant, stage_decay or cosine)");
}

double schedule_eta(const Schedule& schedule, std::size_t step, std::size_t steps_per_epoch) {
  switch (schedule.kind) {
    case Schedule::Kind::constant:
      return schedule.eta0;
    case Schedule::Kind::stage_decay: {
      const std::size_t spe = std::max<std::size_t>(steps_per_epoch, 1);
      const std::size_t epoch = step / spe;
      const std::size_t stages = epoch / std::max<std::size_t>(schedule.period_epochs, 1);
      double eta = schedule.eta0;
      for (std::size_t s = 0; s < stages; ++s) eta /= schedule.factor;
      return eta;
    }
    case Schedule::Kind::cosine: {
      const double total = static_cast<double>(std::max<std::size_t>(schedule.total_steps, 1));
      const double t = std::min(static_cast<double>(step), total);
      return schedule.eta0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t / total));
    }
  }
  return schedule.eta0;
}

std::size_t UpdateMap::effective_batch() const {
  const std::size_t n = objective ? objective->num_examples() : 0;
  if (sampling == SamplingMode::full_batch || batch_size == 0) return n;
  if (sampling == SamplingMode::epoch_shuffle) return std::min(batch_size, n);
  return batch_size;
}

bool UpdateMap::deterministic() const {
  const std::size_t n = objective ? objective->num_examples() : 0;
  if (sampling == SamplingMode::full_batch || batch_size == 0) return true;
  // A shuffled epoch of one full batch is the same set every step.
  return sampling == SamplingMode::epoch_shuffle && batch_size >= n;
}

std::size_t UpdateMap::steps_per_epoch() const {
  const std::size_t n = objective ? objective->num_examples() : 1;
  const std::size_t m = std::max<std::size_t>(effective_batch(), 1);
  return (n + m - 1) / m;
}

MinibatchSampler::MinibatchSampler(std::size_t num_examples, std::size_t batch_size, SamplingMode mode,
                                   std::uint64_t seed)
    : n_(num_examples), m_(batch_size), mode_(mode), rng_(seed) {
  if (n_ == 0) throw InvalidInput("sampler needs at least one example");
  if (mode_ == SamplingMode::full_batch || m_ == 0 || (mode_ == SamplingMode::epoch_shuffle && m_ >= n_)) {
    mode_ = SamplingMode::full_batch;
    m_ = n_;
  }
}

MinibatchSampler::MinibatchSampler(const UpdateMap& map, std::uint64_t seed)
    : MinibatchSampler(map.objective->num_examples(), map.batch_size, map.sampling, seed) {}

std::size_t MinibatchSampler::steps_per_epoch() const { return (n_ + m_ - 1) / m_; }

std::vector<std::size_t> MinibatchSampler::next() {
  switch (mode_) {
    case SamplingMode::full_batch:
      return all_indices(n_);
    case SamplingMode::iid: {
      std::vector<std::size_t> b(m_);
      for (auto& i : b) i = uniform_index(rng_, n_);
      return b;
    }
    case SamplingMode::epoch_shuffle: {
      if (cursor_ == 0) {
        perm_ = all_indices(n_);
        // Fisher-Yates with the portable index draw.
        for (std::size_t i = n_ - 1; i > 0; --i) std::swap(perm_[i], perm_[uniform_index(rng_, i + 1)]);
      }
      const std::size_t end = std::min(cursor_ + m_, n_);
      std::vector<std::size_t> b(perm_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 perm_.begin() + static_cast<std::ptrdiff_t>(end));
      cursor_ = end == n_ ? 0 : end;
      return b;
    }
  }
  return {};
}

StepResult apply_update(const UpdateMap& map, const ParamVector& theta, std::vector<std::size_t> batch, double eta) {
  if (!(eta > 0.0)) throw InvalidInput("step size must be positive");
  StepResult r;
  ParamVector grad;
  r.record.eta = eta;
  r.record.batch_loss = map.objective->loss_and_grad(theta, batch, grad);
  r.record.batch = std::move(batch);
  // (1 - eta gamma) theta - eta grad
  r.next = theta;
  if (map.weight_decay != 0.0) r.next *= 1.0 - eta * map.weight_decay;
  r.next.axpy(-eta, grad);
  r.finite = std::isfinite(r.record.batch_loss) && grad.all_finite() && r.next.all_finite();
  return r;
}

StepResult sgd_step(const UpdateMap& map, const ParamVector& theta, MinibatchSampler& sampler, double eta) {
  return apply_update(map, theta, sampler.next(), eta);
}

StepResult sgd_step(const UpdateMap& map, const ParamVector& theta, MinibatchSampler& sampler) {
  return sgd_step(map, theta, sampler, map.step_size);
}

bool Trajectory::has_step(std::size_t step) const {
  return std::binary_search(iterate_steps.begin(), iterate_steps.end(), step);
}

const ParamVector& Trajectory::at_step(std::size_t step) const {
  const auto it = std::lower_bound(iterate_steps.begin(), iterate_steps.end(), step);
  if (it == iterate_steps.end() || *it != step) {
    throw InvalidInput("iterate at step " + std::to_string(step) + " was not stored (stride " +
                       std::to_string(stride) + ")");
  }
  return iterates[static_cast<std::size_t>(it - iterate_steps.begin())];
}

std::size_t default_stride(std::size_t dim, std::size_t num_steps) {
  constexpr std::size_t kMaxStored = 100000;
  if (dim <= 1000 && num_steps <= kMaxStored) return 1;
  return std::max<std::size_t>(1, (num_steps + kMaxStored - 1) / kMaxStored);
}

Trajectory run_trajectory(const UpdateMap& map, const Schedule& schedule, const ParamVector& theta0,
                          std::size_t num_steps, std::size_t stride) {
  if (!map.objective) throw ConfigError("update map has no objective");
  if (num_steps < 1) throw InvalidInput("run_trajectory needs num_steps >= 1");
  if (!theta0.all_finite()) throw InvalidInput("initial iterate has non-finite entries");
  if (stride == 0) stride = default_stride(theta0.size(), num_steps);

  Trajectory t;
  t.seed = map.seed;
  t.objective = map.objective->describe();
  t.stride = stride;
  t.sampling = map.sampling;
  t.batch_size = map.effective_batch();
  t.steps_per_epoch = map.steps_per_epoch();
  t.weight_decay = map.weight_decay;
  t.records.reserve(num_steps);
  t.iterates.push_back(theta0);
  t.iterate_steps.push_back(0);

  MinibatchSampler sampler(map, derive_seed(map.seed, kStreamSampling));
  ParamVector theta = theta0;
  for (std::size_t k = 0; k < num_steps; ++k) {
    const double eta = schedule_eta(schedule, k, t.steps_per_epoch);
    StepResult r = sgd_step(map, theta, sampler, eta);
    r.record.step = k;
    if (!r.finite) {
      t.diverged = true;
      t.divergence_reason = "non-finite value at step " + std::to_string(k) + " (batch loss " +
                            fmt_double(r.record.batch_loss) + ")";
      break;
    }
    const double norm = r.next.norm();
    t.records.push_back(std::move(r.record));
    theta = std::move(r.next);
    const std::size_t step = k + 1;
    if (norm > kDivergenceNorm) {
      t.diverged = true;
      t.divergence_reason = "||theta|| = " + fmt_double(norm) + " exceeds 1e12 at step " + std::to_string(step);
      t.iterates.push_back(theta);
      t.iterate_steps.push_back(step);
      break;
    }
    if (step % stride == 0 || step == num_steps) {
      t.iterates.push_back(theta);
      t.iterate_steps.push_back(step);
    }
  }
  if (t.iterate_steps.back() != t.records.size()) {
    t.iterates.push_back(theta);
    t.iterate_steps.push_back(t.records.size());
  }
  return t;
}

std::optional<std::size_t> orbit_period(const Trajectory& traj, std::size_t max_period, double tol, std::size_t tail) {
  if (traj.stride != 1) throw InvalidInput("orbit_period needs stride-1 storage");
  const std::size_t n = traj.iterates.size();
  if (n < 2) return std::nullopt;
  tail = std::min(tail, n);
  for (std::size_t p = 1; p <= max_period && p < tail; ++p) {
    bool ok = true;
    for (std::size_t t = n - tail; t + p < n && ok; ++t) {
      ok = (traj.iterates[t + p] - traj.iterates[t]).norm() <= tol;
    }
    if (ok) return p;
  }
  return std::nullopt;
}

}  // namespace ergodyn
