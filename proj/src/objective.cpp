#include "ergodyn/objective.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"

namespace ergodyn {

double Objective::full_loss(const ParamVector& theta) const {
  const auto idx = all_indices(num_examples());
  return loss(theta, idx);
}

ParamVector Objective::full_grad(const ParamVector& theta) const {
  const auto idx = all_indices(num_examples());
  ParamVector g;
  loss_and_grad(theta, idx, g);
  return g;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

void check_batch(Batch batch, std::size_t num_examples) {
  if (batch.empty()) throw InvalidInput("empty batch");
  for (std::size_t i : batch) {
    if (i >= num_examples) {
      throw InvalidInput("batch index " + std::to_string(i) + " out of range (" +
                         std::to_string(num_examples) + " examples)");
    }
  }
}

namespace {

void check_size(const ParamVector& theta, std::size_t expected, const char* who) {
  if (theta.size() != expected) {
    throw ConfigError(std::string(who) + ": expected " + std::to_string(expected) + " parameters, got " +
                      std::to_string(theta.size()));
  }
}

}  // namespace

RegularizedObjective::RegularizedObjective(ObjectivePtr base, double weight_decay)
    : base_(std::move(base)), weight_decay_(weight_decay) {
  if (!base_) throw ConfigError("regularized objective needs a base objective");
  if (!(weight_decay_ >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

double RegularizedObjective::loss(const ParamVector& theta, Batch batch) const {
  const double base = base_->loss(theta, batch);
  if (weight_decay_ == 0.0) return base;
  return base + 0.5 * weight_decay_ * theta.squared_norm();
}

double RegularizedObjective::loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const {
  const double base = base_->loss_and_grad(theta, batch, grad);
  if (weight_decay_ == 0.0) return base;
  grad.axpy(weight_decay_, theta);
  return base + 0.5 * weight_decay_ * theta.squared_norm();
}

std::string RegularizedObjective::describe() const {
  return base_->describe() + "+wd(" + fmt_double(weight_decay_) + ")";
}

SinProductEval sin_product_eval(const Eigen::Vector2d& theta) {
  const double s1 = std::sin(theta[0]), c1 = std::cos(theta[0]);
  const double s2 = std::sin(theta[1]), c2 = std::cos(theta[1]);
  SinProductEval e;
  e.value = 100.0 * s1 * s2;
  e.grad = {100.0 * c1 * s2, 100.0 * s1 * c2};
  e.hessian << -100.0 * s1 * s2, 100.0 * c1 * c2, 100.0 * c1 * c2, -100.0 * s1 * s2;
  return e;
}

double SinProductObjective::loss(const ParamVector& theta, Batch batch) const {
  check_batch(batch, 1);
  check_size(theta, 2, "sin_product");
  return amplitude_ * std::sin(theta[0]) * std::sin(theta[1]);
}

double SinProductObjective::loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const {
  check_batch(batch, 1);
  check_size(theta, 2, "sin_product");
  const double s1 = std::sin(theta[0]), c1 = std::cos(theta[0]);
  const double s2 = std::sin(theta[1]), c2 = std::cos(theta[1]);
  if (!grad.same_layout(theta)) grad = theta.zeros_like();
  grad[0] = amplitude_ * c1 * s2;
  grad[1] = amplitude_ * s1 * c2;
  return amplitude_ * s1 * s2;
}

std::string SinProductObjective::describe() const { return "sin_product(" + fmt_double(amplitude_) + ")"; }

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() == 0) throw ConfigError("quadratic: matrix must be square and non-empty");
  if (!a_.isApprox(a_.transpose(), 1e-12)) throw ConfigError("quadratic: matrix must be symmetric");
}

QuadraticObjective QuadraticObjective::diagonal(const std::vector<double>& diag) {
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), static_cast<Eigen::Index>(diag.size()));
  return QuadraticObjective(Eigen::MatrixXd(d.asDiagonal()));
}

ParamVector QuadraticObjective::layout() const {
  return ParamVector(std::vector<double>(static_cast<std::size_t>(a_.rows()), 0.0),
                     {BlockShape{static_cast<std::size_t>(a_.rows()), 1}});
}

double QuadraticObjective::loss(const ParamVector& theta, Batch batch) const {
  check_batch(batch, 1);
  check_size(theta, static_cast<std::size_t>(a_.rows()), "quadratic");
  return 0.5 * theta.vec().dot(a_ * theta.vec());
}

double QuadraticObjective::loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const {
  check_batch(batch, 1);
  check_size(theta, static_cast<std::size_t>(a_.rows()), "quadratic");
  if (!grad.same_layout(theta)) grad = theta.zeros_like();
  grad.vec() = a_ * theta.vec();
  return 0.5 * theta.vec().dot(grad.vec());
}

std::string QuadraticObjective::describe() const {
  std::ostringstream os;
  os << "quadratic(dim=" << a_.rows() << ")";
  return os.str();
}

double ZeroObjective::loss(const ParamVector& theta, Batch batch) const {
  check_batch(batch, n_);
  check_size(theta, layout_.size(), "zero");
  return 0.0;
}

double ZeroObjective::loss_and_grad(const ParamVector& theta, Batch batch, ParamVector& grad) const {
  check_batch(batch, n_);
  check_size(theta, layout_.size(), "zero");
  grad = theta.zeros_like();
  return 0.0;
}

std::vector<ParamVector> per_example_grads(const Objective& obj, const ParamVector& theta, Batch examples,
                                           std::size_t cap) {
  if (examples.size() > cap) {
    throw CapacityError("per-example gradients requested for " + std::to_string(examples.size()) +
                        " examples, cap is " + std::to_string(cap) + "; use a subsampled estimate");
  }
  check_batch(examples, obj.num_examples());
  std::vector<ParamVector> out;
  out.reserve(examples.size());
  for (std::size_t i : examples) {
    ParamVector g;
    const std::size_t one[1] = {i};
    obj.loss_and_grad(theta, one, g);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<ParamVector> per_example_grads(const Objective& obj, const ParamVector& theta, std::size_t cap) {
  if (obj.num_examples() > cap) {
    throw CapacityError("per-example gradients requested for " + std::to_string(obj.num_examples()) +
                        " examples, cap is " + std::to_string(cap) + "; use a subsampled estimate");
  }
  const auto idx = all_indices(obj.num_examples());
  return per_example_grads(obj, theta, idx, cap);
}

ParamVector hvp(const Objective& obj, const ParamVector& theta, const ParamVector& v, Batch batch, double eps) {
  const double vn = v.norm();
  if (!(vn > 0.0)) throw InvalidInput("hvp: direction must be non-zero");
  if (v.size() != theta.size()) throw InvalidInput("hvp: direction size mismatch");
  const double r = eps * (1.0 + theta.norm()) / vn;
  ParamVector plus = theta;
  plus.axpy(r, v);
  ParamVector minus = theta;
  minus.axpy(-r, v);
  ParamVector gp, gm;
  obj.loss_and_grad(plus, batch, gp);
  obj.loss_and_grad(minus, batch, gm);
  gp -= gm;
  gp *= 1.0 / (2.0 * r);
  return gp;
}

}  // namespace ergodyn
