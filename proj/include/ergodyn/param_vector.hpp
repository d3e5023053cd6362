#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ergodyn {

/// Shape of one parameter block. A bias or BN scale vector is a (n, 1) block.
struct BlockShape {
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const { return rows * cols; }
  bool operator==(const BlockShape&) const = default;
};

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Flat real parameter vector with per-block shape metadata. Blocks are laid
/// out back to back, each column-major.
class ParamVector {
 public:
  ParamVector() = default;
  /// Zero vector with the given block layout.
  explicit ParamVector(std::vector<BlockShape> shapes);
  /// Takes ownership of `values`; throws ConfigError if the block sizes do not
  /// sum to values.size().
  ParamVector(std::vector<double> values, std::vector<BlockShape> shapes);

  /// Single (n, 1) block.
  static ParamVector flat(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::size_t num_blocks() const { return shapes_.size(); }
  const std::vector<BlockShape>& shapes() const { return shapes_; }
  const BlockShape& shape(std::size_t b) const { return shapes_.at(b); }
  std::size_t offset(std::size_t b) const { return offsets_.at(b); }
  bool same_layout(const ParamVector& other) const { return shapes_ == other.shapes_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  MatrixMap block(std::size_t b);
  ConstMatrixMap block(std::size_t b) const;
  VectorMap vec() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
  ConstVectorMap vec() const { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }

  /// Zero vector with this vector's layout.
  ParamVector zeros_like() const { return ParamVector(shapes_); }

  double norm() const;
  double squared_norm() const;
  double dot(const ParamVector& other) const;
  bool all_finite() const;

  /// this += alpha * x
  ParamVector& axpy(double alpha, const ParamVector& x);
  ParamVector& operator*=(double s);
  ParamVector& operator+=(const ParamVector& x) { return axpy(1.0, x); }
  ParamVector& operator-=(const ParamVector& x) { return axpy(-1.0, x); }

  bool operator==(const ParamVector& other) const {
    return shapes_ == other.shapes_ && values_ == other.values_;
  }

 private:
  void rebuild_offsets();

  std::vector<double> values_;
  std::vector<BlockShape> shapes_;
  std::vector<std::size_t> offsets_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double s, ParamVector a);

}  // namespace ergodyn
