#include "ergodyn/mlp.hpp"

#include <cmath>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/linalg.hpp"

namespace ergodyn {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "' (expected relu, tanh or identity)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

MlpSpec MlpSpec::make(std::vector<std::size_t> widths, Activation hidden) {
  MlpSpec s;
  s.widths = std::move(widths);
  if (s.widths.size() >= 2) {
    s.activations.assign(s.widths.size() - 1, hidden);
    s.activations.back() = Activation::identity;
  }
  return s;
}

std::vector<BlockShape> MlpSpec::shapes() const {
  std::vector<BlockShape> out;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) out.push_back({widths[l + 1], widths[l]});
  return out;
}

std::size_t MlpSpec::num_params() const {
  std::size_t n = 0;
  for (const auto& s : shapes()) n += s.size();
  return n;
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw ConfigError("mlp needs at least an input and an output width");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("mlp widths must be positive");
  }
  if (activations.size() != widths.size() - 1) {
    throw ConfigError("mlp has " + std::to_string(widths.size() - 1) + " layers but " +
                      std::to_string(activations.size()) + " activations");
  }
  if (activations.back() != Activation::identity) throw ConfigError("mlp output activation must be identity");
}

CrossEntropy cross_entropy(const Eigen::VectorXd& logits, int label) {
  if (logits.size() < 2) throw InvalidInput("cross_entropy needs at least 2 logits");
  if (label < 0 || label >= logits.size()) throw InvalidInput("cross_entropy label out of range");
  if (!logits.allFinite()) throw InvalidInput("cross_entropy: non-finite logits");
  const double mx = logits.maxCoeff();
  const Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
  const double sum = e.sum();
  CrossEntropy out;
  out.value = logits[label] - (mx + std::log(sum));
  out.grad = -e / sum;
  out.grad[label] += 1.0;
  return out;
}

namespace {

void check_theta(const MlpSpec& spec, const ParamVector& theta) {
  const auto shapes = spec.shapes();
  if (theta.num_blocks() < shapes.size()) throw ConfigError("parameter vector has too few blocks for the mlp");
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (!(theta.shape(l) == shapes[l])) {
      throw ConfigError("block " + std::to_string(l) + " has shape " + std::to_string(theta.shape(l).rows) + "x" +
                        std::to_string(theta.shape(l).cols) + ", mlp expects " + std::to_string(shapes[l].rows) +
                        "x" + std::to_string(shapes[l].cols));
    }
  }
}

}  // namespace

ForwardTrace mlp_forward(const MlpSpec& spec, const ParamVector& theta, const Eigen::VectorXd& x) {
  spec.validate();
  check_theta(spec, theta);
  if (static_cast<std::size_t>(x.size()) != spec.widths.front()) throw ConfigError("input width mismatch");
  if (!(x.norm() <= 1.0 + 1e-12)) throw InvalidInput("mlp_forward: input norm exceeds 1");
  ForwardTrace t;
  t.post.push_back(x);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    Eigen::MatrixXd z = theta.block(l) * t.post.back();
    t.pre.emplace_back(z);
    detail::apply_activation(spec.activations[l], z);
    t.post.emplace_back(z);
  }
  return t;
}

namespace detail {

Eigen::MatrixXd gather_inputs(const Dataset& data, Batch batch) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.input_dim()), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = data.input(batch[k]);
  return x;
}

void apply_activation(Activation a, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::identity: break;
  }
}

void activation_backward(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& x, Eigen::MatrixXd& dx) {
  switch (a) {
    case Activation::relu: dx = (z.array() > 0.0).select(dx, 0.0); break;
    case Activation::tanh: dx.array() *= 1.0 - x.array().square(); break;
    case Activation::identity: break;
  }
}

double softmax_xent(const Eigen::MatrixXd& logits, const std::vector<int>& labels, Eigen::MatrixXd* dlogits) {
  const Eigen::Index b = logits.cols();
  // Worked on the transpose (one column per class) so every step is a
  // contiguous vector operation across examples.
  thread_local Eigen::MatrixXd e;
  thread_local Eigen::VectorXd mx, sum;
  e = logits.transpose();
  mx = e.col(0);
  for (Eigen::Index j = 1; j < e.cols(); ++j) mx = mx.cwiseMax(e.col(j));
  for (Eigen::Index j = 0; j < e.cols(); ++j) e.col(j) -= mx;
  e = e.array().exp().matrix();
  sum = e.col(0);
  for (Eigen::Index j = 1; j < e.cols(); ++j) sum += e.col(j);
  double picked = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) picked += logits(labels[static_cast<std::size_t>(i)], i);
  const double total = mx.sum() + sum.array().log().sum() - picked;
  if (dlogits) {
    *dlogits = e.transpose();
    for (Eigen::Index i = 0; i < b; ++i) {
      dlogits->col(i) /= sum[i];
      (*dlogits)(labels[static_cast<std::size_t>(i)], i) -= 1.0;
    }
    *dlogits /= static_cast<double>(b);
  }
  return total / static_cast<double>(b);
}

}  // namespace detail

MlpObjective::MlpObjective(MlpSpec spec, std::shared_ptr<const Dataset> data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  spec_.validate();
  if (!data_) throw ConfigError("mlp objective needs a dataset");
  if (spec_.widths.front() != data_->input_dim()) {
    throw ConfigError("mlp input width " + std::to_string(spec_.widths.front()) + " != dataset dimension " +
                      std::to_string(data_->input_dim()));
  }
  if (spec_.widths.back() != static_cast<std::size_t>(data_->num_classes())) {
    throw ConfigError("mlp output width " + std::to_string(spec_.widths.back()) + " != number of classes " +
                      std::to_string(data_->num_classes()));
  }
}

double MlpObjective::loss(const ParamVector& theta, Batch batch) const {
  check_batch(batch, num_examples());
  check_theta(spec_, theta);
  // Buffers are reused across calls; full-dataset evaluations are dominated by
  // allocation and gathering otherwise.
  thread_local Eigen::MatrixXd x, z;
  thread_local std::vector<int> y;
  bool whole = batch.size() == data_->size();
  for (std::size_t k = 0; whole && k < batch.size(); ++k) whole = batch[k] == k;
  const Eigen::MatrixXd* in = &data_->inputs();
  if (!whole) {
    x.resize(static_cast<Eigen::Index>(data_->input_dim()), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t k = 0; k < batch.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = data_->input(batch[k]);
    in = &x;
    y.clear();
    for (std::size_t i : batch) y.push_back(data_->label(i));
  }
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    z.noalias() = theta.block(l) * *in;
    detail::apply_activation(spec_.activations[l], z);
    std::swap(x, z);
    in = &x;
  }
  return detail::softmax_xent(x, whole ? data_->labels() : y, nullptr);
}

double MlpObjective::loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const {
  check_batch(batch, num_examples());
  check_theta(spec_, theta);
  const std::size_t layers = spec_.num_layers();
  std::vector<Eigen::MatrixXd> pre(layers), post(layers + 1);
  post[0] = detail::gather_inputs(*data_, batch);
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = theta.block(l) * post[l];
    post[l + 1] = pre[l];
    detail::apply_activation(spec_.activations[l], post[l + 1]);
  }
  std::vector<int> y;
  y.reserve(batch.size());
  for (std::size_t i : batch) y.push_back(data_->label(i));
  Eigen::MatrixXd delta;
  const double value = detail::softmax_xent(post[layers], y, &delta);

  if (!grad.same_layout(theta)) grad = theta.zeros_like();
  for (std::size_t l = layers; l-- > 0;) {
    detail::activation_backward(spec_.activations[l], pre[l], post[l + 1], delta);
    grad.block(l).noalias() = delta * post[l].transpose();
    if (l > 0) delta = theta.block(l).transpose() * delta;
  }
  return value;
}

std::string MlpObjective::describe() const {
  std::ostringstream os;
  os << "mlp(";
  for (std::size_t i = 0; i < spec_.widths.size(); ++i) os << (i ? "-" : "") << spec_.widths[i];
  os << ";";
  for (std::size_t i = 0; i < spec_.activations.size(); ++i) os << (i ? "," : "") << to_string(spec_.activations[i]);
  os << ";N=" << data_->size() << ")";
  return os.str();
}

ParamVector init_compact(const MlpSpec& spec, double w, Rng& rng) {
  spec.validate();
  if (!(w > 0.0)) throw ConfigError("compact init radius must be positive");
  ParamVector theta(spec.shapes());
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    auto blk = theta.block(l);
    for (Eigen::Index j = 0; j < blk.cols(); ++j) {
      for (Eigen::Index i = 0; i < blk.rows(); ++i) blk(i, j) = standard_normal(rng);
    }
    const double u = uniform01(rng);
    const auto op = operator_norm(Eigen::MatrixXd(blk));
    if (op.value > 0.0) blk *= u * w / op.value;
  }
  return theta;
}

ParamVector init_gaussian(const MlpSpec& spec, double gain, Rng& rng) {
  spec.validate();
  ParamVector theta(spec.shapes());
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    auto blk = theta.block(l);
    const double sd = gain / std::sqrt(static_cast<double>(blk.cols()));
    for (Eigen::Index j = 0; j < blk.cols(); ++j) {
      for (Eigen::Index i = 0; i < blk.rows(); ++i) blk(i, j) = sd * standard_normal(rng);
    }
  }
  return theta;
}

}  // namespace ergodyn
