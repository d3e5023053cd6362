#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ergodyn {

/// Labelled classification data. Inputs are stored one example per column and
/// every column satisfies ||x||_2 <= 1.
class Dataset {
 public:
  Dataset() = default;
  /// Validates norms and label range; throws InvalidInput otherwise.
  Dataset(Eigen::MatrixXd inputs, std::vector<int> labels, int num_classes);

  /// Divides every input by the largest input norm so that the largest norm is
  /// exactly 1. The divisor is kept in input_scale().
  static Dataset normalized(Eigen::MatrixXd raw_inputs, std::vector<int> labels, int num_classes);

  std::size_t size() const { return labels_.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs_.rows()); }
  int num_classes() const { return num_classes_; }
  double input_scale() const { return input_scale_; }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const std::vector<int>& labels() const { return labels_; }
  auto input(std::size_t i) const { return inputs_.col(static_cast<Eigen::Index>(i)); }
  int label(std::size_t i) const { return labels_[i]; }

  /// Copies of the examples listed in `indices`, in order.
  Dataset subset(const std::vector<std::size_t>& indices) const;
  /// Dataset repeated `k` times (used to check that per-dataset statistics are means).
  Dataset repeated(std::size_t k) const;

 private:
  Eigen::MatrixXd inputs_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  double input_scale_ = 1.0;
};

struct BlobsSpec {
  int num_classes = 2;
  std::size_t input_dim = 2;
  std::size_t per_class = 50;
  double separation = 3.0;
  std::uint64_t seed = 0;
};

/// Isotropic unit-variance Gaussian blobs. Class centres are `separation` times
/// a seeded random unit direction; the result is normalized.
Dataset make_blobs(const BlobsSpec& spec);

/// CSV with a header row. The label column is found by name; all other
/// columns are features. Inputs are normalized on ingestion.
Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& label_column = "label");

/// Writes features as x0..x{d-1} followed by `label`, 17 significant digits.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace ergodyn
