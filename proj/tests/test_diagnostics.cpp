#include "doctest.h"

#include <cmath>
#include <numbers>

#include "ergodyn/diagnostics.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/mlp.hpp"
#include "oracles.hpp"

using namespace ergodyn;

namespace {

std::shared_ptr<const Dataset> blobs(std::uint64_t seed, std::size_t per_class = 10) {
  return std::make_shared<const Dataset>(make_blobs({3, 2, per_class, 2.5, seed}));
}

ParamVector random_theta(const MlpSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return init_gaussian(spec, 1.2, rng);
}

}  // namespace

TEST_CASE("bias-variance identity holds exactly") {
  const MlpSpec spec = MlpSpec::make({2, 8, 3}, Activation::tanh);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MlpObjective obj(spec, blobs(seed));
    const ParamVector theta = random_theta(spec, seed);
    const DiagnosticsRecord r = full_quantities(obj, theta);
    double mean_sq = 0.0;
    for (const auto& g : per_example_grads(obj, theta)) mean_sq += g.squared_norm();
    mean_sq /= static_cast<double>(obj.num_examples());
    CHECK(std::abs(r.noise * r.noise + r.grad_norm * r.grad_norm - mean_sq) <= 1e-9 * mean_sq);
    CHECK(r.mean_sq_example_grad == doctest::Approx(mean_sq).epsilon(1e-12));
    CHECK(r.noise >= 0.0);
    CHECK(r.g2 >= 0.0);
    CHECK(r.sample_size == obj.num_examples());
  }
}

TEST_CASE("single example has zero noise") {
  auto one = std::make_shared<const Dataset>(blobs(1)->subset({4}));
  const MlpSpec spec = MlpSpec::make({2, 8, 3}, Activation::tanh);
  MlpObjective obj(spec, one);
  CHECK(full_quantities(obj, random_theta(spec, 2)).noise == 0.0);
}

TEST_CASE("duplicating the dataset leaves the record unchanged") {
  const MlpSpec spec = MlpSpec::make({2, 8, 3}, Activation::relu);
  auto data = blobs(3);
  auto twice = std::make_shared<const Dataset>(data->repeated(3));
  const ParamVector theta = random_theta(spec, 4);
  const auto a = full_quantities(MlpObjective(spec, data), theta);
  const auto b = full_quantities(MlpObjective(spec, twice), theta);
  CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-12));
  CHECK(b.grad_norm == doctest::Approx(a.grad_norm).epsilon(1e-12));
  CHECK(b.noise == doctest::Approx(a.noise).epsilon(1e-12));
}

TEST_CASE("second moment of the minibatch gradient") {
  const MlpSpec spec = MlpSpec::make({2, 8, 3}, Activation::tanh);
  MlpObjective obj(spec, blobs(5));
  const ParamVector theta = random_theta(spec, 5);
  const auto r1 = full_quantities(obj, theta, {}, 1);
  const auto r4 = full_quantities(obj, theta, {}, 4);
  CHECK(r1.g2 == doctest::Approx(r1.mean_sq_example_grad));
  CHECK(r4.g2 == doctest::Approx(r1.grad_norm * r1.grad_norm + r1.noise * r1.noise / 4.0));

  // Monte Carlo check of E||g_B||^2 for with-replacement batches of 4.
  MinibatchSampler s(obj.num_examples(), 4, SamplingMode::iid, 11);
  double acc = 0.0;
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    ParamVector g;
    obj.loss_and_grad(theta, s.next(), g);
    acc += g.squared_norm();
  }
  CHECK(acc / draws == doctest::Approx(r4.g2).epsilon(0.03));
}

TEST_CASE("subsample sizes are validated") {
  const MlpSpec spec = MlpSpec::make({2, 4, 3}, Activation::relu);
  MlpObjective obj(spec, blobs(6));
  Rng rng(1);
  CHECK_THROWS_AS(full_quantities(obj, random_theta(spec, 1), 0, rng), InvalidInput);
  CHECK_THROWS_AS(full_quantities(obj, random_theta(spec, 1), obj.num_examples() + 1, rng), InvalidInput);
  const auto exact = full_quantities(obj, random_theta(spec, 1));
  const auto full = full_quantities(obj, random_theta(spec, 1), obj.num_examples(), rng);
  CHECK(full.loss == doctest::Approx(exact.loss).epsilon(1e-13));
  CHECK(full.grad_norm == doctest::Approx(exact.grad_norm).epsilon(1e-12));
}

TEST_CASE("subsampled gradient norm is biased upward") {
  const MlpSpec spec = MlpSpec::make({2, 8, 3}, Activation::tanh);
  MlpObjective obj(spec, blobs(7, 20));
  const ParamVector theta = random_theta(spec, 7);
  const double exact = full_quantities(obj, theta).grad_norm;
  const auto rows = precision_sweep(obj, theta, {6, 15, 30, 60}, 200, 3);
  for (const auto& r : rows) {
    CHECK(r.grad_norm_mean >= exact - 2.0 * r.grad_norm_sd / std::sqrt(static_cast<double>(r.resamples)));
  }
  CHECK(rows.back().grad_norm_sd == 0.0);
  CHECK(rows.back().grad_norm_mean == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("sharpness on known spectra") {
  QuadraticObjective q = QuadraticObjective::diagonal({1.0, 5.0});
  const auto r = sharpness(q, ParamVector::flat({0.2, -0.1}));
  CHECK(r.converged);
  CHECK(std::abs(r.signed_value() - 5.0) <= 1e-3);

  SinProductObjective f;
  const auto s = sharpness(f, ParamVector::flat({std::numbers::pi / 2, std::numbers::pi / 2}));
  CHECK(std::abs(std::abs(s.signed_value()) - 100.0) <= 0.1);
  CHECK(s.signed_value() < 0.0);
}

TEST_CASE("sharpness matches a dense Jacobi eigensolve") {
  Rng rng(12);
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd a(50, 50);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = standard_normal(rng);
    a = (0.5 * (a + a.transpose())).eval();
    QuadraticObjective q(a);
    const auto ev = oracle::jacobi_eigenvalues(a);
    const double top = std::abs(ev.front()) > std::abs(ev.back()) ? ev.front() : ev.back();
    SharpnessOptions opts;
    opts.max_iters = 5000;
    opts.tol = 1e-9;
    opts.seed = static_cast<std::uint64_t>(t);
    const auto r = sharpness(q, ParamVector(std::vector<double>(50, 0.1), {{50, 1}}), {}, opts);
    CHECK(std::abs(r.magnitude - std::abs(top)) <= 1e-3 * std::abs(top));
  }
}

TEST_CASE("power iteration reports non-convergence with its best estimate") {
  QuadraticObjective q = QuadraticObjective::diagonal({1.0, 0.999, 0.5});
  SharpnessOptions opts;
  opts.max_iters = 2;
  opts.tol = 1e-15;
  const auto r = sharpness(q, ParamVector::flat({0.0, 0.0, 0.0}), {}, opts);
  CHECK_FALSE(r.converged);
  CHECK(r.magnitude > 0.5);
}

TEST_CASE("edge-of-stability ratio") {
  DiagnosticsRecord r;
  r.grad_norm = 3.0;
  r.g2 = 9.0;
  r.eta = 0.5;
  r.sharpness = 2.0;
  REQUIRE(eos_ratio(r).has_value());
  CHECK(*eos_ratio(r) == doctest::Approx(1.0));
  r.sharpness = 0.0;
  CHECK_FALSE(eos_ratio(r).has_value());
  r.sharpness = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(eos_ratio(r).has_value());

  // Exact two-cycle of 1/2 lambda theta^2 at eta lambda = 2.
  const double lambda = 4.0, eta = 0.5;
  QuadraticObjective q = QuadraticObjective::diagonal({lambda});
  DiagnosticsRecord c = full_quantities(q, ParamVector::flat({0.7}));
  c.eta = eta;
  c.sharpness = sharpness(q, ParamVector::flat({0.7})).signed_value();
  CHECK(std::abs(*eos_ratio(c) - 1.0 / (eta * lambda)) <= 1e-6 / (eta * lambda));
}

TEST_CASE("epoch losses") {
  auto data = blobs(8, 4);  // N = 12
  const MlpSpec spec = MlpSpec::make({2, 5, 3}, Activation::relu);
  auto obj = std::make_shared<MlpObjective>(spec, data);

  SUBCASE("stationary iterate: moving equals fixed") {
    UpdateMap map{obj, 0.5, 0.0, 4, SamplingMode::epoch_shuffle, 1};
    const Trajectory tr = run_trajectory(map, Schedule::constant(0.5), obj->layout(), 9, 1);
    for (std::size_t e = 0; e < 3; ++e) {
      const auto p = epoch_losses(tr, *obj, e);
      CHECK(p.moving == doctest::Approx(p.fixed).epsilon(1e-15));
      CHECK(p.fixed == doctest::Approx(std::log(3.0)));
    }
  }
  SUBCASE("one step per epoch") {
    UpdateMap map{obj, 0.5, 0.0, 12, SamplingMode::epoch_shuffle, 1};
    const Trajectory tr = run_trajectory(map, Schedule::constant(0.5), random_theta(spec, 3), 3, 1);
    const auto p = epoch_losses(tr, *obj, 1);
    CHECK(p.moving == doctest::Approx(obj->full_loss(tr.iterates[1])).epsilon(1e-14));
    CHECK(p.fixed == doctest::Approx(obj->full_loss(tr.iterates[2])).epsilon(1e-14));
  }
  SUBCASE("iid trajectories are rejected") {
    UpdateMap map{obj, 0.5, 0.0, 4, SamplingMode::iid, 1};
    const Trajectory tr = run_trajectory(map, Schedule::constant(0.5), random_theta(spec, 3), 9, 1);
    CHECK_THROWS_AS(epoch_losses(tr, *obj, 0), InvalidInput);
  }
}

TEST_CASE("diagnostics CSV layout") {
  CHECK(diagnostics_csv_header() == "step,eta,loss,grad_norm,noise,sharpness,g2,eos_ratio,sample_size");
  DiagnosticsRecord r;
  r.step = 3;
  r.eta = 0.1;
  const std::string row = diagnostics_csv_row(r);
  CHECK(row.rfind("3,0.10000000000000001,", 0) == 0);
  CHECK(row.find("nan") != std::string::npos);
}
