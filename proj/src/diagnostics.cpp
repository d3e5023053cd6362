#include "ergodyn/diagnostics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"

namespace ergodyn {

DiagnosticsRecord full_quantities(const Objective& obj, const ParamVector& theta, Batch sample,
                                  std::size_t batch_size) {
  std::vector<std::size_t> all;
  if (sample.empty()) {
    all = all_indices(obj.num_examples());
    sample = all;
  }
  const auto grads = per_example_grads(obj, theta, sample);
  const double n = static_cast<double>(grads.size());

  DiagnosticsRecord r;
  r.sample_size = grads.size();
  r.loss = obj.loss(theta, sample);
  ParamVector mean = theta.zeros_like();
  for (const auto& g : grads) mean += g;
  mean *= 1.0 / n;
  r.grad_norm = mean.norm();
  double noise_sq = 0.0, second = 0.0;
  for (const auto& g : grads) {
    noise_sq += (mean.vec() - g.vec()).squaredNorm();
    second += g.squared_norm();
  }
  r.noise = std::sqrt(noise_sq / n);
  r.mean_sq_example_grad = second / n;
  const double m = static_cast<double>(std::max<std::size_t>(batch_size, 1));
  r.g2 = r.grad_norm * r.grad_norm + r.noise * r.noise / m;
  return r;
}

DiagnosticsRecord full_quantities(const Objective& obj, const ParamVector& theta, std::size_t sample_size, Rng& rng,
                                  std::size_t batch_size) {
  const std::size_t n = obj.num_examples();
  if (sample_size == 0) throw InvalidInput("sample_size must be positive");
  if (sample_size > n) throw InvalidInput("sample_size exceeds the number of examples");
  if (sample_size == n) return full_quantities(obj, theta, Batch{}, batch_size);
  // Partial Fisher-Yates: first sample_size entries form a uniform subset.
  auto idx = all_indices(n);
  for (std::size_t i = 0; i < sample_size; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  idx.resize(sample_size);
  return full_quantities(obj, theta, idx, batch_size);
}

PowerIterationResult sharpness(const Objective& obj, const ParamVector& theta, Batch batch,
                               const SharpnessOptions& opts) {
  std::vector<std::size_t> all;
  if (batch.empty()) {
    all = all_indices(obj.num_examples());
    batch = all;
  }
  ParamVector dir = theta.zeros_like();
  const LinearOperator op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    dir.vec() = v;
    return hvp(obj, theta, dir, batch, opts.hvp_eps).vec();
  };
  return power_iteration(op, static_cast<Eigen::Index>(theta.size()), {opts.tol, opts.max_iters, opts.seed});
}

std::optional<double> eos_ratio(const DiagnosticsRecord& record) {
  const double denom = record.eta * std::abs(record.sharpness) * record.g2;
  if (!(denom > 0.0) || !std::isfinite(denom)) return std::nullopt;
  return record.grad_norm * record.grad_norm / denom;
}

EpochLossPair epoch_losses(const Trajectory& traj, const Objective& obj, std::size_t epoch) {
  if (traj.sampling == SamplingMode::iid) {
    throw InvalidInput("epoch losses need an epoch-shuffle trajectory (got iid sampling)");
  }
  const std::size_t spe = traj.steps_per_epoch;
  const std::size_t begin = epoch * spe, end = begin + spe;
  if (end > traj.records.size()) {
    throw InvalidInput("epoch " + std::to_string(epoch) + " needs step records up to " + std::to_string(end) +
                       ", trajectory has " + std::to_string(traj.records.size()));
  }
  double weighted = 0.0;
  std::size_t count = 0;
  for (std::size_t k = begin; k < end; ++k) {
    const auto& rec = traj.records[k];
    if (rec.batch.empty()) throw InvalidInput("step " + std::to_string(k) + " has no minibatch record");
    weighted += static_cast<double>(rec.batch.size()) * rec.batch_loss;
    count += rec.batch.size();
  }
  EpochLossPair p;
  p.epoch = epoch;
  p.moving = weighted / static_cast<double>(count);
  p.fixed = obj.full_loss(traj.at_step(end));
  return p;
}

std::vector<PrecisionRow> precision_sweep(const Objective& obj, const ParamVector& theta,
                                          const std::vector<std::size_t>& sizes, std::size_t resamples,
                                          std::uint64_t seed) {
  if (resamples < 1) throw InvalidInput("precision sweep needs at least one resample");
  std::vector<PrecisionRow> rows;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    Rng rng(derive_seed(seed, si));
    const std::size_t draws = sizes[si] == obj.num_examples() ? 1 : resamples;
    std::vector<double> loss, gn, noise;
    for (std::size_t r = 0; r < draws; ++r) {
      const auto rec = full_quantities(obj, theta, sizes[si], rng);
      loss.push_back(rec.loss);
      gn.push_back(rec.grad_norm);
      noise.push_back(rec.noise);
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    PrecisionRow row;
    row.sample_size = sizes[si];
    row.resamples = draws;
    stats(loss, row.loss_mean, row.loss_sd);
    stats(gn, row.grad_norm_mean, row.grad_norm_sd);
    stats(noise, row.noise_mean, row.noise_sd);
    rows.push_back(row);
  }
  return rows;
}

std::string diagnostics_csv_header() { return "step,eta,loss,grad_norm,noise,sharpness,g2,eos_ratio,sample_size"; }

std::string diagnostics_csv_row(const DiagnosticsRecord& r) {
  std::ostringstream os;
  const auto ratio = eos_ratio(r);
  os << r.step << ',' << fmt_double(r.eta) << ',' << fmt_double(r.loss) << ',' << fmt_double(r.grad_norm) << ','
     << fmt_double(r.noise) << ',' << fmt_double(r.sharpness) << ',' << fmt_double(r.g2) << ','
     << (ratio ? fmt_double(*ratio) : std::string("nan")) << ',' << r.sample_size;
  return os.str();
}

}  // namespace ergodyn
