#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergodyn/dataset.hpp"
#include "ergodyn/errors.hpp"
#include "ergodyn/experiment.hpp"

using namespace ergodyn;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("blobs are normalized, balanced and reproducible") {
  BlobsSpec spec{3, 4, 20, 2.0, 9};
  const Dataset a = make_blobs(spec);
  const Dataset b = make_blobs(spec);
  CHECK(a.size() == 60);
  CHECK(a.inputs() == b.inputs());
  CHECK(a.labels() == b.labels());
  double max_norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) max_norm = std::max(max_norm, a.input(i).norm());
  CHECK(max_norm <= 1.0);
  CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<int> counts(3, 0);
  for (int y : a.labels()) ++counts[static_cast<std::size_t>(y)];
  CHECK(counts == std::vector<int>{20, 20, 20});
  CHECK(a.input_scale() > 0.0);
}

TEST_CASE("zero separation puts the class means at the same point") {
  // With separation 0 every class is drawn around the origin, so class means
  // differ only by sampling noise.
  const Dataset d = make_blobs({2, 2, 4000, 0.0, 3});
  Eigen::Vector2d m0 = Eigen::Vector2d::Zero(), m1 = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < d.size(); ++i) (d.label(i) == 0 ? m0 : m1) += d.input(i);
  m0 /= 4000.0;
  m1 /= 4000.0;
  CHECK((m0 - m1).norm() < 0.05);
}

TEST_CASE("inputs above unit norm are rejected") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 1.0;
  CHECK_THROWS_AS(Dataset(x, {0}, 2), InvalidInput);
  CHECK_THROWS_AS(Dataset(Eigen::MatrixXd::Zero(2, 1), {2}, 2), InvalidInput);
}

TEST_CASE("csv round trip and ingestion normalization") {
  const fs::path dir = fs::temp_directory_path() / "ergodyn_dataset_test";
  fs::create_directories(dir);
  const fs::path raw = dir / "raw.csv";
  {
    std::ofstream out(raw);
    out << "a,cls,b\n3,0,4\n0,1,1\n1,1,0\n";
  }
  const Dataset d = read_dataset_csv(raw, "cls");
  CHECK(d.size() == 3);
  CHECK(d.input_dim() == 2);
  CHECK(d.input_scale() == doctest::Approx(5.0));
  CHECK(d.input(0).norm() == doctest::Approx(1.0));
  CHECK(d.label(1) == 1);
  CHECK_THROWS_AS(read_dataset_csv(raw, "missing"), InvalidInput);

  write_dataset_csv(d, dir / "out.csv");
  const Dataset e = read_dataset_csv(dir / "out.csv");
  CHECK(e.labels() == d.labels());
  CHECK((e.inputs() - d.inputs()).norm() < 1e-15);
}

TEST_CASE("generated dataset files are byte-identical across runs") {
  const fs::path dir = fs::temp_directory_path() / "ergodyn_dataset_test";
  fs::create_directories(dir);
  generate_dataset({2, 2, 50, 3.0, 11}, dir / "g1.csv");
  generate_dataset({2, 2, 50, 3.0, 11}, dir / "g2.csv");
  CHECK(slurp(dir / "g1.csv") == slurp(dir / "g2.csv"));
}

TEST_CASE("subset and repetition") {
  const Dataset d = make_blobs({2, 2, 5, 3.0, 1});
  const Dataset s = d.subset({3, 1});
  CHECK(s.size() == 2);
  CHECK(s.input(0) == d.input(3));
  const Dataset r = d.repeated(3);
  CHECK(r.size() == 30);
  CHECK(r.input(12) == d.input(2));
}
