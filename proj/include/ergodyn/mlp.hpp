#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergodyn/dataset.hpp"
#include "ergodyn/objective.hpp"
#include "ergodyn/rng.hpp"

namespace ergodyn {

enum class Activation { relu, tanh, identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Coordinate-wise Lipschitz constant. All supported activations satisfy
/// sigma(0) = 0 and have constant 1.
inline double lipschitz_constant(Activation) { return 1.0; }

/// Layer widths d_0..d_L and the activation applied after each of the L
/// linear maps. The last activation must be identity.
struct MlpSpec {
  std::vector<std::size_t> widths;
  std::vector<Activation> activations;

  /// Hidden layers use `hidden`, the output layer is identity.
  static MlpSpec make(std::vector<std::size_t> widths, Activation hidden);

  std::size_t num_layers() const { return widths.size() - 1; }
  double activation_lipschitz() const { return 1.0; }
  /// Block layout W_0 (d_1 x d_0), ..., W_{L-1} (d_L x d_{L-1}).
  std::vector<BlockShape> shapes() const;
  std::size_t num_params() const;
  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

struct CrossEntropy {
  double value;
  Eigen::VectorXd grad;
};

/// Log-likelihood form x_y - log sum_j exp(x_j) (non-positive) and its exact
/// gradient delta_{y,k} - softmax_k. Training minimizes the negation.
CrossEntropy cross_entropy(const Eigen::VectorXd& logits, int label);

/// Per-example values of z_l = W_{l-1} x_{l-1} (l = 1..L) and x_l (l = 0..L).
struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;   // pre[l-1] = z_l
  std::vector<Eigen::VectorXd> post;  // post[l] = x_l
  const Eigen::VectorXd& logits() const { return post.back(); }
};

ForwardTrace mlp_forward(const MlpSpec& spec, const ParamVector& theta, const Eigen::VectorXd& x);

/// Mean softmax cross-entropy (training sign) of a bias-free MLP over a dataset.
class MlpObjective final : public Objective {
 public:
  MlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data);

  ParamVector layout() const override { return ParamVector(spec_.shapes()); }
  std::size_t num_examples() const override { return data_->size(); }
  double loss(const ParamVector& theta, Batch batch) const override;
  double loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const override;
  std::string describe() const override;

  const MlpSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }

 private:
  MlpSpec spec_;
  std::shared_ptr<const Dataset> data_;
};

/// Each W_l drawn Gaussian and rescaled to operator norm u * w, u ~ U(0, 1),
/// so the result lies in {||W_l||_op <= w}.
ParamVector init_compact(const MlpSpec& spec, double w, Rng& rng);
/// Gaussian with standard deviation gain / sqrt(fan_in) (He init for gain sqrt 2).
ParamVector init_gaussian(const MlpSpec& spec, double gain, Rng& rng);

// Shared by the MLP and the batch-norm network.
namespace detail {
Eigen::MatrixXd gather_inputs(const Dataset& data, Batch batch);
void apply_activation(Activation a, Eigen::MatrixXd& z);
/// dz = dx * sigma'(z) with ReLU'(0) = 0.
void activation_backward(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& x, Eigen::MatrixXd& dx);
/// Mean over columns of log-sum-exp(col) - col[y]; writes (softmax - onehot)/B into dlogits if non-null.
double softmax_xent(const Eigen::MatrixXd& logits, const std::vector<int>& labels, Eigen::MatrixXd* dlogits);
}  // namespace detail

}  // namespace ergodyn
