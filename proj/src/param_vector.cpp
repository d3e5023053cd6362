#include "ergodyn/param_vector.hpp"

#include <cmath>
#include <string>

#include "ergodyn/errors.hpp"

namespace ergodyn {

ParamVector::ParamVector(std::vector<BlockShape> shapes) : shapes_(std::move(shapes)) {
  rebuild_offsets();
  values_.assign(offsets_.empty() ? 0 : offsets_.back() + shapes_.back().size(), 0.0);
}

ParamVector::ParamVector(std::vector<double> values, std::vector<BlockShape> shapes)
    : values_(std::move(values)), shapes_(std::move(shapes)) {
  rebuild_offsets();
  const std::size_t total = offsets_.empty() ? 0 : offsets_.back() + shapes_.back().size();
  if (total != values_.size()) {
    throw ConfigError("parameter blocks cover " + std::to_string(total) + " entries but " +
                      std::to_string(values_.size()) + " values were given");
  }
}

ParamVector ParamVector::flat(std::vector<double> values) {
  const std::size_t n = values.size();
  return ParamVector(std::move(values), {BlockShape{n, 1}});
}

void ParamVector::rebuild_offsets() {
  offsets_.clear();
  std::size_t off = 0;
  for (const auto& s : shapes_) {
    offsets_.push_back(off);
    off += s.size();
  }
}

MatrixMap ParamVector::block(std::size_t b) {
  const auto& s = shapes_.at(b);
  return {values_.data() + offsets_[b], static_cast<Eigen::Index>(s.rows),
          static_cast<Eigen::Index>(s.cols)};
}

ConstMatrixMap ParamVector::block(std::size_t b) const {
  const auto& s = shapes_.at(b);
  return {values_.data() + offsets_[b], static_cast<Eigen::Index>(s.rows),
          static_cast<Eigen::Index>(s.cols)};
}

double ParamVector::squared_norm() const { return vec().squaredNorm(); }

double ParamVector::norm() const { return std::sqrt(squared_norm()); }

double ParamVector::dot(const ParamVector& other) const {
  if (other.size() != size()) throw InvalidInput("dot: size mismatch");
  return vec().dot(other.vec());
}

bool ParamVector::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ParamVector& ParamVector::axpy(double alpha, const ParamVector& x) {
  if (x.size() != size()) throw InvalidInput("axpy: size mismatch");
  vec() += alpha * x.vec();
  return *this;
}

ParamVector& ParamVector::operator*=(double s) {
  vec() *= s;
  return *this;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(double s, ParamVector a) { return a *= s; }

}  // namespace ergodyn
