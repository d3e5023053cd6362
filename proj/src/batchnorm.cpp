#include "ergodyn/batchnorm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergodyn/errors.hpp"

namespace ergodyn {

BatchNormOutput batchnorm_forward(const BatchNormLayer& layer, const Eigen::MatrixXd& inputs) {
  if (!(layer.epsilon > 0.0)) throw ConfigError("batch norm epsilon must be positive");
  if (inputs.cols() < 2) throw ConfigError("batch norm needs a batch of at least 2 examples");
  if (layer.scale.size() != inputs.rows() || layer.shift.size() != inputs.rows()) {
    throw ConfigError("batch norm scale/shift width does not match the input width");
  }
  const double m = static_cast<double>(inputs.cols());
  BatchNormOutput out;
  out.mean = inputs.rowwise().sum() / m;
  const Eigen::MatrixXd centred = inputs.colwise() - out.mean;
  out.variance = centred.array().square().rowwise().sum().matrix() / m;
  const Eigen::VectorXd inv_sd = (out.variance.array() + layer.epsilon).rsqrt().matrix();
  out.normalized = inv_sd.asDiagonal() * centred;
  out.output = (layer.scale.asDiagonal() * out.normalized).colwise() + layer.shift;
  return out;
}

Eigen::MatrixXd batchnorm_backward(const BatchNormLayer& layer, const BatchNormOutput& fwd,
                                   const Eigen::MatrixXd& doutput, Eigen::VectorXd& dscale, Eigen::VectorXd& dshift) {
  const double m = static_cast<double>(doutput.cols());
  dscale = doutput.cwiseProduct(fwd.normalized).rowwise().sum();
  dshift = doutput.rowwise().sum();
  const Eigen::MatrixXd dxhat = layer.scale.asDiagonal() * doutput;
  const Eigen::VectorXd inv_sd = (fwd.variance.array() + layer.epsilon).rsqrt().matrix();
  const Eigen::VectorXd mean_d = dxhat.rowwise().sum() / m;
  const Eigen::VectorXd mean_dx = dxhat.cwiseProduct(fwd.normalized).rowwise().sum() / m;
  Eigen::MatrixXd din = dxhat.colwise() - mean_d;
  din -= mean_dx.asDiagonal() * fwd.normalized;
  return inv_sd.asDiagonal() * din;
}

BnMlpObjective::BnMlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data, double epsilon)
    : spec_(std::move(spec)), data_(std::move(data)), epsilon_(epsilon) {
  spec_.validate();
  if (!data_) throw ConfigError("batch-norm objective needs a dataset");
  if (!(epsilon_ > 0.0)) throw ConfigError("batch norm epsilon must be positive");
  if (spec_.widths.front() != data_->input_dim()) throw ConfigError("mlp input width does not match dataset");
  if (spec_.widths.back() != static_cast<std::size_t>(data_->num_classes())) {
    throw ConfigError("mlp output width does not match number of classes");
  }
}

ParamVector BnMlpObjective::layout() const {
  auto shapes = spec_.shapes();
  const std::size_t d = spec_.widths.back();
  shapes.push_back({d, 1});
  shapes.push_back({d, 1});
  return ParamVector(shapes);
}

namespace {

struct Forward {
  std::vector<Eigen::MatrixXd> pre, post;
  BatchNormLayer bn;
  BatchNormOutput out;
  std::vector<int> labels;
};

Forward run_forward(const MlpSpec& spec, const Dataset& data, double eps, const ParamVector& theta, Batch batch) {
  check_batch(batch, data.size());
  if (batch.size() < 2) throw ConfigError("batch-norm objective needs batches of at least 2 examples");
  const std::size_t layers = spec.num_layers();
  if (theta.num_blocks() != layers + 2) throw ConfigError("batch-norm objective: wrong number of parameter blocks");
  Forward f;
  f.pre.resize(layers);
  f.post.resize(layers + 1);
  f.post[0] = detail::gather_inputs(data, batch);
  for (std::size_t l = 0; l < layers; ++l) {
    if (!(theta.shape(l) == spec.shapes()[l])) throw ConfigError("batch-norm objective: block shape mismatch");
    f.pre[l] = theta.block(l) * f.post[l];
    f.post[l + 1] = f.pre[l];
    detail::apply_activation(spec.activations[l], f.post[l + 1]);
  }
  f.bn.scale = theta.block(layers);
  f.bn.shift = theta.block(layers + 1);
  f.bn.epsilon = eps;
  f.out = batchnorm_forward(f.bn, f.post[layers]);
  f.labels.reserve(batch.size());
  for (std::size_t i : batch) f.labels.push_back(data.label(i));
  return f;
}

}  // namespace

BnMlpObjective::Evaluation BnMlpObjective::evaluate(const ParamVector& theta, Batch batch) const {
  Forward f = run_forward(spec_, *data_, epsilon_, theta, batch);
  const double value = detail::softmax_xent(f.out.output, f.labels, nullptr);
  return {value, std::move(f.out)};
}

double BnMlpObjective::loss(const ParamVector& theta, Batch batch) const { return evaluate(theta, batch).loss; }

double BnMlpObjective::loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const {
  Forward f = run_forward(spec_, *data_, epsilon_, theta, batch);
  Eigen::MatrixXd dout;
  const double value = detail::softmax_xent(f.out.output, f.labels, &dout);
  if (!grad.same_layout(theta)) grad = theta.zeros_like();
  const std::size_t layers = spec_.num_layers();
  Eigen::VectorXd da, db;
  Eigen::MatrixXd delta = batchnorm_backward(f.bn, f.out, dout, da, db);
  grad.block(layers) = da;
  grad.block(layers + 1) = db;
  for (std::size_t l = layers; l-- > 0;) {
    detail::activation_backward(spec_.activations[l], f.pre[l], f.post[l + 1], delta);
    grad.block(l).noalias() = delta * f.post[l].transpose();
    if (l > 0) delta = theta.block(l).transpose() * delta;
  }
  return value;
}

std::string BnMlpObjective::describe() const {
  std::ostringstream os;
  os << "bn_mlp(";
  for (std::size_t i = 0; i < spec_.widths.size(); ++i) os << (i ? "-" : "") << spec_.widths[i];
  os << ";eps=" << epsilon_ << ";N=" << data_->size() << ")";
  return os.str();
}

ParamVector init_bn_mlp(const BnMlpObjective& obj, double gain, double scale_bound, Rng& rng) {
  ParamVector theta = obj.layout();
  const ParamVector w = init_gaussian(obj.spec(), gain, rng);
  std::copy(w.values().begin(), w.values().end(), theta.values().begin());
  auto a = theta.block(obj.scale_block());
  for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, 0) = (2.0 * uniform01(rng) - 1.0) * scale_bound;
  return theta;
}

}  // namespace ergodyn
