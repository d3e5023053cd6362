#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergodyn/batchnorm.hpp"
#include "ergodyn/dataset.hpp"
#include "ergodyn/dynamics.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/measures.hpp"
#include "ergodyn/mlp.hpp"

namespace ergodyn {

enum class Verdict { pass, fail, not_applicable };

std::string to_string(Verdict v);
/// 0 for pass / not-applicable, 1 for fail.
int exit_code(Verdict v);
inline constexpr int kExitPrecondition = 2;

/// Raised when a checker's preconditions reject the configuration outright.
class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Lipschitz constant of the cross-entropy in the logits.
inline const double kCrossEntropyLipschitz = std::sqrt(2.0);

// ---------------------------------------------------------------------------
// Weight decay keeps a bias-free MLP inside {||W_l||_op <= w}.

struct CompactDomainConfig {
  MlpSpec spec;
  std::shared_ptr<const Dataset> data;
  double weight_decay = 1.0;
  double eta = 1.0;
  std::size_t steps = 1000;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Initial operator norm scale relative to w (1 = inside the domain; the
  /// negative test uses 10).
  double init_radius_factor = 1.0;
  /// Optional objective override (e.g. a zero-loss objective); defaults to the MLP loss.
  ObjectivePtr objective;
};

struct CompactDomainReport {
  std::size_t num_layers = 0;
  double weight_decay = 0.0;
  double eta = 0.0;
  double c_sigma = 1.0;
  double c_ell = 0.0;
  double radius = 0.0;           ///< w = (gamma / (c_ell c_sigma^L))^(1/(L-2))
  double loss_bound = 0.0;       ///< log d + (gamma / (c_ell c_sigma^2))^(L/(L-2))
  double output_norm_bound = 0.0;  ///< (w c_sigma)^L
  std::vector<double> max_op_norm;  ///< per stored step (step 0 = init)
  std::vector<double> abs_loss;     ///< |L_S| per stored step
  double worst_op_norm = 0.0;
  double worst_abs_loss = 0.0;
  std::size_t op_violations = 0;
  std::size_t loss_violations = 0;
  bool step_precondition = true;   ///< eta <= 1/gamma
  bool init_precondition = true;   ///< init inside C_w
  Verdict verdict = Verdict::pass;
  nlohmann::json config;

  nlohmann::json to_json() const;
  std::string summary() const;
};

/// w for the given depth, decay and constants; throws PreconditionError for L < 3.
double compact_radius(std::size_t num_layers, double weight_decay, double c_ell, double c_sigma);
double compact_loss_bound(std::size_t num_layers, double weight_decay, double c_ell, double c_sigma, int num_classes);

CompactDomainReport check_compact_domain(const CompactDomainConfig& cfg);

// ---------------------------------------------------------------------------
// Batch normalization on the last layer bounds the scale parameter.

struct BnConfig {
  MlpSpec spec;
  std::shared_ptr<const Dataset> data;
  double weight_decay = 1.0;
  double eta = 0.5;
  std::size_t batch_size = 4;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  double epsilon = kDefaultBnEpsilon;
};

struct BnReport {
  std::size_t batch_size = 0;
  double weight_decay = 0.0;
  double eta = 0.0;
  double scale_bound = 0.0;     ///< 2 sqrt(m) / gamma
  double xhat_bound = 0.0;      ///< sqrt(m)
  double loss_bound = 0.0;      ///< 4m / gamma + log d
  double max_abs_scale = 0.0;
  double max_abs_xhat = 0.0;
  double max_abs_loss = 0.0;
  std::size_t steps = 0;
  bool scale_ok = true, xhat_ok = true, loss_ok = true;
  bool step_precondition = true;
  Verdict verdict = Verdict::pass;
  nlohmann::json config;

  nlohmann::json to_json() const;
  std::string summary() const;
};

inline double bn_scale_bound(std::size_t m, double weight_decay) {
  return 2.0 * std::sqrt(static_cast<double>(m)) / weight_decay;
}

BnReport check_bn_bounds(const BnConfig& cfg);

// ---------------------------------------------------------------------------
// Detecting that the time-averaged loss has stopped changing.

struct InvarianceDetection {
  bool reached = false;
  std::size_t step = 0;
  double last_statistic = 0.0;  ///< per-step change of the windowed mean loss, last window
  double last_tolerance = 0.0;
};

inline constexpr std::size_t kDefaultInvarianceWindow = 200;
inline constexpr double kDefaultIqrFraction = 0.01;

/// Splits the (stride-1) loss series into consecutive windows of `window`
/// steps; the statistic for window k is |mean_k - mean_{k-1}| / window, the
/// per-step change of the windowed mean loss. Reached when it is <= tol for
/// three windows in a row; `step` is the start of the later window of the first
/// passing pair. Without `tol`, each window uses 1% of the interquartile range
/// of its losses.
InvarianceDetection detect_invariance(const Trajectory& traj, const Objective& obj,
                                      std::size_t window = kDefaultInvarianceWindow,
                                      std::optional<double> tol = std::nullopt);
/// Same on a precomputed per-step loss series.
InvarianceDetection detect_invariance(const std::vector<double>& losses, std::size_t window,
                                      std::optional<double> tol = std::nullopt);

// ---------------------------------------------------------------------------
// A smaller step size lowers the loss in expectation under an invariant measure.

struct SmallerStepConfig {
  std::vector<double> c_grid = {0.5, 0.2, 0.1, 0.05, 0.02, 0.01};
  std::size_t samples = 200;
  double eps_stat = 1e-6;
  std::uint64_t seed = 0;
  /// Hessian-variation proxy (atom pairs); 0 disables it.
  std::size_t m_hat_pairs = 3;
};

struct SmallerStepReport {
  double eta = 0.0;
  std::vector<double> c_grid;
  std::vector<double> estimate;
  std::vector<double> std_error;
  double mean_sq_grad = 0.0;     ///< E_mu ||grad L||^2
  double g_max = 0.0;            ///< max ||g|| seen over the samples
  std::optional<double> m_hat;   ///< estimate of M from sampled segments
  std::optional<double> best_c;  ///< largest c negative at 2 standard errors
  bool not_applicable = false;
  std::size_t samples = 0;
  std::size_t atoms = 0;
  Verdict verdict = Verdict::fail;
  nlohmann::json config;

  /// Non-negative prefix followed by a negative suffix over the descending grid.
  bool single_sign_change() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

/// `map.objective` is the training loss (regularized when map.weight_decay > 0
/// the decay is included); `map.step_size` is the base eta.
SmallerStepReport check_smaller_step(const EmpiricalMeasure& measure, const UpdateMap& map,
                                     const SmallerStepConfig& cfg);

// ---------------------------------------------------------------------------
// Cross-entropy bounds.

struct CeLemmaReport {
  std::vector<int> dims;
  std::size_t trials = 0;
  std::size_t bound_violations = 0;      ///< |l| > c + log d
  std::size_t gradient_violations = 0;   ///< ||grad|| > sqrt 2
  std::size_t lipschitz_violations = 0;  ///< |l(x) - l(x')| > sqrt 2 ||x - x'||
  double max_grad_norm = 0.0;
  double max_bound_ratio = 0.0;  ///< max |l| / (c + log d)
  double max_lipschitz_ratio = 0.0;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::pass;

  nlohmann::json to_json() const;
  std::string summary() const;
};

CeLemmaReport check_ce_lemma(const std::vector<int>& dims, std::size_t trials, std::uint64_t seed);

}  // namespace ergodyn
