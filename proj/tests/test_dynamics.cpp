#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "ergodyn/dynamics.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/mlp.hpp"
#include "ergodyn/trajectory_io.hpp"

using namespace ergodyn;
namespace fs = std::filesystem;

namespace {

UpdateMap quad_map(double lambda, double eta) {
  return UpdateMap{std::make_shared<QuadraticObjective>(QuadraticObjective::diagonal({lambda})), eta, 0.0, 0,
                   SamplingMode::full_batch, 0};
}

UpdateMap mlp_map(std::size_t batch, SamplingMode mode, std::uint64_t seed) {
  auto data = std::make_shared<const Dataset>(make_blobs({3, 2, 10, 3.0, 4}));
  auto obj = std::make_shared<MlpObjective>(MlpSpec::make({2, 6, 3}, Activation::relu), data);
  return UpdateMap{obj, 0.3, 0.01, batch, mode, seed};
}

ParamVector mlp_init(const UpdateMap& map, std::uint64_t seed) {
  Rng rng(seed);
  return init_gaussian(static_cast<const MlpObjective&>(*map.objective).spec(), 1.0, rng);
}

}  // namespace

TEST_CASE("schedules") {
  const Schedule stage = Schedule::stage_decay(0.1, 10.0, 30);
  const std::size_t spe = 7;
  CHECK(schedule_eta(stage, 35 * spe, spe) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(schedule_eta(stage, 30 * spe - 1, spe) == 0.1);
  CHECK(schedule_eta(stage, 30 * spe, spe) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(schedule_eta(stage, 60 * spe, spe) == doctest::Approx(0.001).epsilon(1e-15));
  const Schedule c = Schedule::constant(0.04);
  for (std::size_t s : {0u, 5u, 100000u}) CHECK(schedule_eta(c, s, 3) == 0.04);
  const Schedule cos = Schedule::cosine(0.2, 500);
  CHECK(std::abs(schedule_eta(cos, 500, 1)) <= 1e-12);
  CHECK(schedule_eta(cos, 0, 1) == doctest::Approx(0.2));
  CHECK(schedule_eta(cos, 250, 1) == doctest::Approx(0.1));
  CHECK_THROWS_AS(parse_schedule_kind("linear"), ConfigError);
}

TEST_CASE("fixed point of the update map") {
  UpdateMap map{std::make_shared<SinProductObjective>(), 0.04, 0.0, 0, SamplingMode::full_batch, 0};
  const ParamVector top = ParamVector::flat({std::numbers::pi / 2, std::numbers::pi / 2});
  MinibatchSampler s(map, 1);
  const auto r = sgd_step(map, top, s);
  // cos(pi/2) rounds to 6e-17, so the gradient is zero only to rounding.
  CHECK((r.next - top).norm() <= 1e-15);

  const ParamVector theta = ParamVector::flat({0.3, -2.0, 5.0});
  UpdateMap flat{std::make_shared<ZeroObjective>(theta, 4), 0.7, 0.0, 2, SamplingMode::iid, 0};
  MinibatchSampler s2(flat, 1);
  CHECK(sgd_step(flat, theta, s2).next == theta);
}

TEST_CASE("decay contracts to zero when eta gamma = 1 and the loss is flat") {
  const ParamVector theta = ParamVector({{2, 2}, {1, 2}});
  auto zero = std::make_shared<ZeroObjective>(theta, 3);
  UpdateMap map{zero, 1.0, 1.0, 2, SamplingMode::iid, 0};
  ParamVector t = theta;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.0 + static_cast<double>(i);
  MinibatchSampler s(map, 2);
  CHECK(sgd_step(map, t, s).next.norm() == 0.0);
}

TEST_CASE("quadratic with eta lambda = 2 flips sign") {
  const UpdateMap map = quad_map(1.0, 2.0);
  MinibatchSampler s(map, 0);
  const auto r = sgd_step(map, ParamVector::flat({1.0}), s);
  CHECK(r.next[0] == -1.0);
  CHECK_THROWS_AS(apply_update(map, ParamVector::flat({1.0}), {0}, 0.0), InvalidInput);
}

TEST_CASE("trajectory storage follows the stride and keeps the final iterate") {
  const UpdateMap map = mlp_map(4, SamplingMode::iid, 7);
  const ParamVector theta0 = mlp_init(map, 1);
  const Trajectory tr = run_trajectory(map, Schedule::constant(0.3), theta0, 23, 5);
  CHECK(tr.num_steps() == 23);
  CHECK(tr.iterate_steps == std::vector<std::size_t>{0, 5, 10, 15, 20, 23});
  CHECK(tr.iterates.front() == theta0);
  CHECK(tr.has_step(15));
  CHECK_FALSE(tr.has_step(16));
  CHECK_THROWS_AS(tr.at_step(16), InvalidInput);
  CHECK_THROWS(run_trajectory(map, Schedule::constant(0.3), theta0, 0));

  const Trajectory one = run_trajectory(map, Schedule::constant(0.3), theta0, 1, 1);
  CHECK(one.iterates.size() == 2);
  CHECK(one.iterates[0] == theta0);
  CHECK(one.records.size() == 1);
}

TEST_CASE("identical seeds give bit-identical trajectories; different seeds differ") {
  const UpdateMap map = mlp_map(4, SamplingMode::iid, 7);
  const ParamVector theta0 = mlp_init(map, 1);
  const Trajectory a = run_trajectory(map, Schedule::constant(0.3), theta0, 50, 1);
  const Trajectory b = run_trajectory(map, Schedule::constant(0.3), theta0, 50, 1);
  REQUIRE(a.iterates.size() == b.iterates.size());
  for (std::size_t i = 0; i < a.iterates.size(); ++i) CHECK(a.iterates[i] == b.iterates[i]);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].batch == b.records[i].batch);
    CHECK(a.records[i].batch_loss == b.records[i].batch_loss);
  }
  UpdateMap other = map;
  other.seed = 8;
  const Trajectory c = run_trajectory(other, Schedule::constant(0.3), theta0, 50, 1);
  CHECK_FALSE(c.final_iterate() == a.final_iterate());
}

TEST_CASE("epoch shuffle visits every example once per epoch") {
  MinibatchSampler s(30, 4, SamplingMode::epoch_shuffle, 3);
  CHECK(s.steps_per_epoch() == 8);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::vector<std::size_t> seen;
    for (std::size_t k = 0; k < s.steps_per_epoch(); ++k) {
      const auto b = s.next();
      seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    std::vector<std::size_t> all(30);
    for (std::size_t i = 0; i < 30; ++i) all[i] = i;
    CHECK(seen == all);
  }
}

TEST_CASE("iid batches sample with replacement from the whole dataset") {
  MinibatchSampler s(5, 4, SamplingMode::iid, 9);
  std::set<std::size_t> seen;
  bool repeated = false;
  for (int k = 0; k < 200; ++k) {
    const auto b = s.next();
    CHECK(b.size() == 4);
    seen.insert(b.begin(), b.end());
    repeated |= std::set<std::size_t>(b.begin(), b.end()).size() < b.size();
  }
  CHECK(seen.size() == 5);
  CHECK(repeated);
}

TEST_CASE("full batch and large batches are deterministic") {
  CHECK(mlp_map(0, SamplingMode::iid, 0).deterministic());
  CHECK(mlp_map(100, SamplingMode::epoch_shuffle, 0).deterministic());
  CHECK_FALSE(mlp_map(4, SamplingMode::iid, 0).deterministic());
  MinibatchSampler s(6, 0, SamplingMode::iid, 0);
  CHECK(s.next() == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("divergence aborts with a truncated, flagged trajectory") {
  const UpdateMap map = quad_map(1.0, 3.0);  // |1 - eta lambda| = 2
  const Trajectory tr = run_trajectory(map, Schedule::constant(3.0), ParamVector::flat({1.0}), 200, 1);
  CHECK(tr.diverged);
  CHECK(tr.num_steps() < 200);
  CHECK(tr.final_iterate().all_finite());
  CHECK(tr.iterates.size() == tr.num_steps() + 1);
  CHECK_FALSE(tr.divergence_reason.empty());
}

TEST_CASE("period-two orbit on the quadratic at eta lambda = 2") {
  const UpdateMap map = quad_map(4.0, 0.5);
  const Trajectory tr = run_trajectory(map, Schedule::constant(0.5), ParamVector::flat({0.3}), 40, 1);
  const auto p = orbit_period(tr, 5, 1e-12, 10);
  REQUIRE(p.has_value());
  CHECK(*p == 2);
  const Trajectory conv = run_trajectory(quad_map(4.0, 0.1), Schedule::constant(0.1), ParamVector::flat({0.3}), 400, 1);
  CHECK(orbit_period(conv, 5, 1e-12, 10) == std::optional<std::size_t>(1));
}

TEST_CASE("default stride") {
  CHECK(default_stride(100, 1000) == 1);
  CHECK(default_stride(100, 100000) == 1);
  CHECK(default_stride(100, 1000000) == 10);
  CHECK(default_stride(5000, 1000) > 0);
}

TEST_CASE("trajectory files round trip") {
  const UpdateMap map = mlp_map(4, SamplingMode::epoch_shuffle, 3);
  const Trajectory tr = run_trajectory(map, Schedule::constant(0.3), mlp_init(map, 2), 17, 4);
  const fs::path dir = fs::temp_directory_path() / "ergodyn_traj_test";
  fs::remove_all(dir);
  write_trajectory(tr, dir);
  std::ifstream bin(dir / "trajectory.bin", std::ios::binary);
  char magic[8];
  bin.read(magic, 8);
  CHECK(std::string(magic, 8) == "ERGDYN01");
  const Trajectory back = read_trajectory(dir);
  REQUIRE(back.iterates.size() == tr.iterates.size());
  for (std::size_t i = 0; i < tr.iterates.size(); ++i) CHECK(back.iterates[i] == tr.iterates[i]);
  CHECK(back.iterate_steps == tr.iterate_steps);
  REQUIRE(back.records.size() == tr.records.size());
  CHECK(back.records[5].batch == tr.records[5].batch);
  CHECK(back.records[5].batch_loss == tr.records[5].batch_loss);
  CHECK(back.sampling == tr.sampling);
  CHECK(back.stride == 4);
}
