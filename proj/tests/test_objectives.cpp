#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ergodyn/batchnorm.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/linalg.hpp"
#include "ergodyn/mlp.hpp"
#include "ergodyn/objective.hpp"
#include "oracles.hpp"

using namespace ergodyn;

namespace {

std::function<double(const Eigen::VectorXd&)> as_function(const Objective& obj, ParamVector layout, Batch batch) {
  return [&obj, layout, batch](const Eigen::VectorXd& x) mutable {
    layout.vec() = x;
    return obj.loss(layout, batch);
  };
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

std::shared_ptr<const Dataset> small_data(std::uint64_t seed, int classes = 3, std::size_t dim = 3,
                                          std::size_t per_class = 4) {
  return std::make_shared<const Dataset>(make_blobs({classes, dim, per_class, 2.0, seed}));
}

}  // namespace

TEST_CASE("cross-entropy matches a long-double reference and is non-positive") {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + static_cast<int>(uniform_index(rng, 8));
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = 30.0 * (uniform01(rng) - 0.5);
    const int y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(d)));
    const auto ce = cross_entropy(x, y);
    CHECK(ce.value <= 0.0);
    CHECK(std::abs(-ce.value - static_cast<double>(oracle::xent_reference(x, y))) <= 1e-12 * (1.0 - ce.value));
    const auto fd = oracle::fd_gradient([y](const Eigen::VectorXd& z) { return cross_entropy(z, y).value; }, x);
    CHECK((ce.grad - fd).norm() < 1e-7);
  }
}

TEST_CASE("cross-entropy equality case and input validation") {
  const auto ce = cross_entropy(Eigen::Vector2d::Zero(), 0);
  CHECK(std::abs(ce.value) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS(cross_entropy(Eigen::VectorXd::Zero(1), 0));
  CHECK_THROWS(cross_entropy(Eigen::Vector2d::Zero(), 2));
  CHECK_THROWS(cross_entropy(Eigen::Vector2d(NAN, 0.0), 0));
}

TEST_CASE("tanh MLP backprop agrees with finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto data = small_data(seed);
    const MlpSpec spec = MlpSpec::make({3, 5, 4, 3}, Activation::tanh);
    MlpObjective obj(spec, data);
    Rng rng(seed);
    const ParamVector theta = init_gaussian(spec, 1.5, rng);
    const auto batch = all_indices(data->size());
    ParamVector g;
    obj.loss_and_grad(theta, batch, g);
    const auto fd = oracle::fd_gradient(as_function(obj, theta, batch), theta.vec());
    CHECK(rel_err(g.vec(), fd) <= 1e-5);
  }
}

TEST_CASE("single-example forward pass agrees with the batched loss") {
  auto data = small_data(2);
  const MlpSpec spec = MlpSpec::make({3, 6, 3}, Activation::relu);
  MlpObjective obj(spec, data);
  Rng rng(1);
  const ParamVector theta = init_gaussian(spec, 1.0, rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < data->size(); ++i) {
    const auto tr = mlp_forward(spec, theta, data->input(i));
    mean -= cross_entropy(tr.logits(), data->label(i)).value;
  }
  mean /= static_cast<double>(data->size());
  CHECK(obj.full_loss(theta) == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("ReLU subgradient at zero is zero") {
  auto data = small_data(3);
  const MlpSpec spec = MlpSpec::make({3, 4, 3}, Activation::relu);
  MlpObjective obj(spec, data);
  ParamVector theta = obj.layout();
  theta.block(1).setConstant(0.7);  // first layer zero: every pre-activation is exactly 0
  const ParamVector g = obj.full_grad(theta);
  CHECK(g.block(0).norm() == 0.0);
  CHECK(g.block(1).norm() == 0.0);  // hidden activations are 0 as well
}

TEST_CASE("weight decay adds gamma theta to the gradient") {
  auto data = small_data(5);
  const MlpSpec spec = MlpSpec::make({3, 4, 3}, Activation::tanh);
  auto base = std::make_shared<MlpObjective>(spec, data);
  RegularizedObjective reg(base, 0.3);
  Rng rng(2);
  const ParamVector theta = init_gaussian(spec, 1.0, rng);
  const ParamVector gb = base->full_grad(theta);
  const ParamVector gr = reg.full_grad(theta);
  CHECK(rel_err(gr.vec(), gb.vec() + 0.3 * theta.vec()) < 1e-14);
  CHECK(reg.full_loss(theta) == doctest::Approx(base->full_loss(theta) + 0.15 * theta.squared_norm()));
}

TEST_CASE("sin-product closed form") {
  SinProductObjective f;
  const ParamVector top = ParamVector::flat({std::numbers::pi / 2, std::numbers::pi / 2});
  CHECK(f.full_loss(top) == doctest::Approx(100.0));
  CHECK(f.full_grad(top).norm() < 1e-12);
  const auto ev = sin_product_eval({std::numbers::pi / 2, std::numbers::pi / 2});
  CHECK(ev.hessian(0, 0) == doctest::Approx(-100.0));
  CHECK(ev.hessian(1, 1) == doctest::Approx(-100.0));
  CHECK(std::abs(ev.hessian(0, 1)) < 1e-12);
  const ParamVector p = ParamVector::flat({0.3, 2.1});
  const auto fd = oracle::fd_gradient(as_function(f, p, all_indices(1)), p.vec());
  CHECK(rel_err(f.full_grad(p).vec(), fd) < 1e-8);
}

TEST_CASE("per-example gradients average to the full gradient") {
  auto data = small_data(6);
  const MlpSpec spec = MlpSpec::make({3, 4, 3}, Activation::tanh);
  MlpObjective obj(spec, data);
  Rng rng(3);
  const ParamVector theta = init_gaussian(spec, 1.0, rng);
  const auto grads = per_example_grads(obj, theta);
  REQUIRE(grads.size() == data->size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta.size()));
  for (const auto& g : grads) mean += g.vec();
  mean /= static_cast<double>(grads.size());
  CHECK(rel_err(mean, obj.full_grad(theta).vec()) < 1e-13);
  CHECK_THROWS_AS(per_example_grads(obj, theta, 5), CapacityError);
}

TEST_CASE("Hessian-vector products match the exact Hessian and are symmetric") {
  Eigen::MatrixXd a(3, 3);
  a << 2, 1, 0, 1, 3, -1, 0, -1, 1;
  QuadraticObjective q(a);
  const ParamVector theta = ParamVector::flat({0.3, -0.2, 0.9});
  const ParamVector v = ParamVector::flat({1.0, 2.0, -1.0});
  CHECK(rel_err(hvp(q, theta, v, all_indices(1)).vec(), a * v.vec()) < 1e-8);
  CHECK_THROWS_AS(hvp(q, theta, v.zeros_like(), all_indices(1)), InvalidInput);

  auto data = small_data(7);
  const MlpSpec spec = MlpSpec::make({3, 4, 3}, Activation::tanh);
  MlpObjective obj(spec, data);
  Rng rng(8);
  const ParamVector th = init_gaussian(spec, 1.0, rng);
  ParamVector u = th.zeros_like(), w = th.zeros_like();
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = standard_normal(rng);
    w[i] = standard_normal(rng);
  }
  const auto batch = all_indices(data->size());
  const double uhw = u.dot(hvp(obj, th, w, batch));
  const double whu = w.dot(hvp(obj, th, u, batch));
  CHECK(std::abs(uhw - whu) <= 1e-5 * std::max(1.0, std::abs(uhw)));
}

TEST_CASE("compact initialization stays inside the operator-norm ball") {
  const MlpSpec spec = MlpSpec::make({4, 10, 10, 3}, Activation::relu);
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const ParamVector theta = init_compact(spec, 0.7, rng);
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(theta.block(l)));
      CHECK(svd.singularValues()[0] <= 0.7 * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("operator norm agrees with the SVD") {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const auto r = static_cast<Eigen::Index>(1 + uniform_index(rng, 12));
    const auto c = static_cast<Eigen::Index>(1 + uniform_index(rng, 12));
    Eigen::MatrixXd w(r, c);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = standard_normal(rng);
    const double exact = Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()[0];
    CHECK(std::abs(operator_norm(w).value - exact) <= 1e-8 * exact);
  }
}

TEST_CASE("MLP spec validation") {
  MlpSpec bad{{2, 3, 2}, {Activation::relu, Activation::relu}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_activation("sigmoid"), ConfigError);
  CHECK(MlpSpec::make({2, 3, 2}, Activation::relu).num_params() == 12);
}

// ---------------------------------------------------------------------------

TEST_CASE("batch normalization forward statistics") {
  Rng rng(2);
  Eigen::MatrixXd x(3, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 5.0 * standard_normal(rng);
  BatchNormLayer layer{Eigen::Vector3d(1.0, 2.0, -1.0), Eigen::Vector3d(0.0, 1.0, 0.5)};
  const auto out = batchnorm_forward(layer, x);
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(std::abs(out.normalized.row(k).mean()) < 1e-12);
    CHECK(out.normalized.row(k).cwiseAbs().maxCoeff() <= 2.0);  // sqrt(m)
  }
  CHECK(out.output(1, 2) == doctest::Approx(2.0 * out.normalized(1, 2) + 1.0));
  CHECK_THROWS_AS(batchnorm_forward(layer, x.leftCols(1)), ConfigError);
}

TEST_CASE("batch-norm network gradient agrees with finite differences") {
  auto data = small_data(11);
  const MlpSpec spec = MlpSpec::make({3, 5, 3}, Activation::tanh);
  BnMlpObjective obj(spec, data);
  Rng rng(5);
  const ParamVector theta = init_bn_mlp(obj, 1.0, 2.0, rng);
  const std::vector<std::size_t> batch = {0, 3, 5, 7, 11};
  ParamVector g;
  obj.loss_and_grad(theta, batch, g);
  const auto fd = oracle::fd_gradient(as_function(obj, theta, batch), theta.vec(), 1e-6);
  CHECK(rel_err(g.vec(), fd) <= 1e-5);
  CHECK_THROWS_AS(obj.loss(theta, std::vector<std::size_t>{1}), ConfigError);
}

TEST_CASE("batch of identical inputs: x_hat = 0 and no gradient on the scale") {
  auto data = small_data(12);
  const MlpSpec spec = MlpSpec::make({3, 4, 3}, Activation::relu);
  BnMlpObjective obj(spec, data);
  Rng rng(6);
  const ParamVector theta = init_bn_mlp(obj, 1.0, 2.0, rng);
  const std::vector<std::size_t> batch = {4, 4, 4, 4};
  const auto ev = obj.evaluate(theta, batch);
  CHECK(ev.bn.normalized.cwiseAbs().maxCoeff() == 0.0);
  ParamVector g;
  obj.loss_and_grad(theta, batch, g);
  CHECK(g.block(obj.scale_block()).norm() == 0.0);
}
