#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergodyn/dynamics.hpp"
#include "ergodyn/objective.hpp"

namespace ergodyn {

/// Uniform (or weighted) mixture of Dirac masses on stored iterates.
struct EmpiricalMeasure {
  std::vector<ParamVector> atoms;
  std::vector<double> weights;
  // Where the atoms came from.
  std::uint64_t trajectory_seed = 0;
  std::size_t first_step = 0;
  std::size_t last_step = 0;
  std::size_t stride = 1;

  std::size_t size() const { return atoms.size(); }
};

/// Uniform measure over the given atoms; throws InvalidInput when empty.
EmpiricalMeasure uniform_measure(std::vector<ParamVector> atoms);

/// Uniform measure over the stored iterates whose steps lie in [first, last],
/// taking every `stride`-th of them.
EmpiricalMeasure build_measure(const Trajectory& traj, std::size_t first_step, std::size_t last_step,
                               std::size_t stride = 1);

/// Scalar function of the parameters with an optional known bound |phi| <= M.
struct Observable {
  std::string name;
  std::function<double(const ParamVector&)> fn;
  std::optional<double> bound;

  double operator()(const ParamVector& theta) const { return fn(theta); }
};

namespace observables {
Observable constant(double c);
Observable full_loss(ObjectivePtr obj);
Observable grad_norm(ObjectivePtr obj);
Observable grad_norm_sq(ObjectivePtr obj);
Observable coordinate(std::size_t index);
/// Parses "loss", "grad_norm", "grad_norm_sq" or "coord:<i>".
Observable by_name(const std::string& name, ObjectivePtr obj);
}  // namespace observables

/// Weighted mean of phi over the atoms. A non-finite value throws InvalidInput
/// naming the atom index.
double time_average(const EmpiricalMeasure& measure, const Observable& phi);

enum class ChangeEstimator {
  resample,  ///< phi(F~(theta_t)) with a freshly drawn minibatch
  reuse      ///< phi(theta_{t+1}); a pure telescope
};

struct VanishingChangeReport {
  std::vector<std::size_t> n;
  std::vector<double> delta;
  std::vector<double> envelope;
  double bound = 0.0;
  bool bound_estimated = false;
  double confidence = 0.1;
  std::optional<double> slope;
  bool deterministic = false;
  ChangeEstimator estimator = ChangeEstimator::resample;
  /// Deterministic maps only: max over the grid of the relative gap between
  /// delta_n and (phi(theta_1) - phi(theta_{n+1})) / n.
  std::optional<double> telescoping_residual;
  std::string observable;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  /// Rows n,delta,envelope.
  std::string to_csv() const;
};

/// M sqrt(2 log(2/delta) / n) + 2M/n.
double hoeffding_envelope(double bound, double confidence, std::size_t n);

/// Least-squares slope of log|y| against log x; empty when fewer than two
/// points have y != 0.
std::optional<double> loglog_slope(const std::vector<std::size_t>& x, const std::vector<double>& y);

/// Delta_n = (1/n) sum_{t=1..n} [phi(theta_t) - phi(F~(theta_t))] for each n in
/// `n_grid`. Needs stride-1 storage. The step size at t is the one recorded in
/// the trajectory. For deterministic maps F~ = F and the telescoping identity
/// is checked as well.
VanishingChangeReport vanishing_change(const Trajectory& traj, const UpdateMap& map, const Observable& phi,
                                       double confidence, std::vector<std::size_t> n_grid, std::uint64_t seed,
                                       ChangeEstimator estimator = ChangeEstimator::resample);

struct InvarianceResidual {
  double residual = 0.0;
  double std_error = 0.0;
};

/// E_mu[phi] - (1/R) sum_r E_mu[phi(F_r(theta))], with F_r the map under the
/// r-th independent draw of minibatches.
InvarianceResidual invariance_residual(const EmpiricalMeasure& measure, const UpdateMap& map, const Observable& phi,
                                       std::size_t num_resamples, std::uint64_t seed);

/// Energy distance between two weighted samples on the line,
/// sqrt(2 * integral (F_a - F_b)^2), which is a metric.
double energy_distance_1d(std::vector<double> a, std::vector<double> wa, std::vector<double> b,
                          std::vector<double> wb);

inline constexpr std::size_t kDefaultProjections = 64;

/// Sliced energy distance: mean of energy_distance_1d over seeded random unit
/// directions. Symmetric and satisfies the triangle inequality for a fixed seed.
double measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                        std::size_t num_projections = kDefaultProjections, std::uint64_t seed = 0);

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace ergodyn
