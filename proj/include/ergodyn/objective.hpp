#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergodyn/param_vector.hpp"

namespace ergodyn {

using Batch = std::span<const std::size_t>;

/// Evaluation surface the dynamics act on. Loss and gradient are means over
/// the examples in `batch`; closed-form objectives have a single example.
class Objective {
 public:
  virtual ~Objective() = default;

  /// Zero parameter vector with the expected block layout.
  virtual ParamVector layout() const = 0;
  virtual std::size_t num_examples() const = 0;
  virtual double loss(const ParamVector& theta, Batch batch) const = 0;
  /// Writes the gradient into `grad` (resized to theta's layout) and returns the loss.
  virtual double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const = 0;
  virtual std::string describe() const = 0;

  std::size_t dim() const { return layout().size(); }

  double full_loss(const ParamVector& theta) const;
  ParamVector full_grad(const ParamVector& theta) const;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// 0, 1, ..., n-1.
std::vector<std::size_t> all_indices(std::size_t n);

/// Throws InvalidInput on an empty batch or an out-of-range index.
void check_batch(Batch batch, std::size_t num_examples);

/// Base loss plus (gamma/2)||theta||^2.
class RegularizedObjective final : public Objective {
 public:
  RegularizedObjective(ObjectivePtr base, double weight_decay);

  ParamVector layout() const override { return base_->layout(); }
  std::size_t num_examples() const override { return base_->num_examples(); }
  double loss(const ParamVector& theta, Batch batch) const override;
  double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const override;
  std::string describe() const override;

  const ObjectivePtr& base() const { return base_; }
  double weight_decay() const { return weight_decay_; }

 private:
  ObjectivePtr base_;
  double weight_decay_;
};

struct SinProductEval {
  double value;
  Eigen::Vector2d grad;
  Eigen::Matrix2d hessian;
};

/// 100 sin(t1) sin(t2) with exact gradient and Hessian.
SinProductEval sin_product_eval(const Eigen::Vector2d& theta);

/// f(t1, t2) = amplitude * sin t1 * sin t2. Smoothness and Lipschitz constant
/// both equal `amplitude`.
class SinProductObjective final : public Objective {
 public:
  explicit SinProductObjective(double amplitude = 100.0) : amplitude_(amplitude) {}

  ParamVector layout() const override { return ParamVector::flat({0.0, 0.0}); }
  std::size_t num_examples() const override { return 1; }
  double loss(const ParamVector& theta, Batch batch) const override;
  double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const override;
  std::string describe() const override;

 private:
  double amplitude_;
};

/// 1/2 theta^T A theta for symmetric A.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(Eigen::MatrixXd a);
  static QuadraticObjective diagonal(const std::vector<double>& diag);

  ParamVector layout() const override;
  std::size_t num_examples() const override { return 1; }
  double loss(const ParamVector& theta, Batch batch) const override;
  double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const override;
  std::string describe() const override;

  const Eigen::MatrixXd& matrix() const { return a_; }

 private:
  Eigen::MatrixXd a_;
};

/// Identically zero loss over an arbitrary layout.
class ZeroObjective final : public Objective {
 public:
  ZeroObjective(ParamVector layout, std::size_t num_examples = 1)
      : layout_(layout.zeros_like()), n_(num_examples) {}

  ParamVector layout() const override { return layout_; }
  std::size_t num_examples() const override { return n_; }
  double loss(const ParamVector& theta, Batch batch) const override;
  double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const override;
  std::string describe() const override { return "zero"; }

 private:
  ParamVector layout_;
  std::size_t n_;
};

inline constexpr std::size_t kDefaultExactCap = 10000;

/// Gradient of each listed example's loss (no regularizer). Throws
/// CapacityError above `cap` examples; callers then subsample.
std::vector<ParamVector> per_example_grads(const Objective& obj, const ParamVector& theta,
                                           Batch examples, std::size_t cap = kDefaultExactCap);
std::vector<ParamVector> per_example_grads(const Objective& obj, const ParamVector& theta,
                                           std::size_t cap = kDefaultExactCap);

inline constexpr double kDefaultHvpEps = 1e-4;

/// Hessian-vector product by central differences of the gradient with radius
/// r = eps * (1 + ||theta||) / ||v||. Throws InvalidInput for v == 0.
ParamVector hvp(const Objective& obj, const ParamVector& theta, const ParamVector& v, Batch batch,
                double eps = kDefaultHvpEps);

}  // namespace ergodyn
