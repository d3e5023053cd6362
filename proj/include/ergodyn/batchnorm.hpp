#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "ergodyn/dataset.hpp"
#include "ergodyn/mlp.hpp"
#include "ergodyn/objective.hpp"

namespace ergodyn {

inline constexpr double kDefaultBnEpsilon = 1e-5;

/// Coordinate-wise batch normalization with trainable scale and shift.
struct BatchNormLayer {
  Eigen::VectorXd scale;  // a
  Eigen::VectorXd shift;  // b
  double epsilon = kDefaultBnEpsilon;
};

struct BatchNormOutput {
  Eigen::MatrixXd normalized;  ///< x_hat, one example per column
  Eigen::MatrixXd output;      ///< a * x_hat + b
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;    ///< biased (1/m) batch variance
};

/// Normalizes the batch `inputs` (one example per column). Requires at least
/// two columns and epsilon > 0; throws ConfigError otherwise.
BatchNormOutput batchnorm_forward(const BatchNormLayer& layer, const Eigen::MatrixXd& inputs);

/// Backward pass: given dL/d(output), returns dL/d(inputs) and accumulates
/// dL/da, dL/db.
Eigen::MatrixXd batchnorm_backward(const BatchNormLayer& layer, const BatchNormOutput& fwd,
                                   const Eigen::MatrixXd& doutput, Eigen::VectorXd& dscale, Eigen::VectorXd& dshift);

/// MLP whose output layer is followed by batch normalization; the loss is the
/// minibatch loss L_B, which couples the examples of a batch. Parameter
/// blocks: W_0..W_{L-1}, then a (d x 1), then b (d x 1).
class BnMlpObjective final : public Objective {
 public:
  BnMlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data, double epsilon = kDefaultBnEpsilon);

  ParamVector layout() const override;
  std::size_t num_examples() const override { return data_->size(); }
  double loss(const ParamVector& theta, Batch batch) const override;
  double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const override;
  std::string describe() const override;

  std::size_t scale_block() const { return spec_.num_layers(); }
  std::size_t shift_block() const { return spec_.num_layers() + 1; }
  double epsilon() const { return epsilon_; }
  const MlpSpec& spec() const { return spec_; }

  struct Evaluation {
    double loss;
    BatchNormOutput bn;
  };
  /// Forward pass exposing the normalized activations of the batch.
  Evaluation evaluate(const ParamVector& theta, Batch batch) const;

 private:
  MlpSpec spec_;
  std::shared_ptr<const Dataset> data_;
  double epsilon_;
};

/// Gaussian weights (see init_gaussian), scale a drawn uniform in
/// [-scale_bound, scale_bound], shift b = 0.
ParamVector init_bn_mlp(const BnMlpObjective& obj, double gain, double scale_bound, Rng& rng);

}  // namespace ergodyn
