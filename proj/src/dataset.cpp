#include "ergodyn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"
#include "ergodyn/rng.hpp"

namespace ergodyn {

namespace {
constexpr double kNormSlack = 1e-12;
}

Dataset::Dataset(Eigen::MatrixXd inputs, std::vector<int> labels, int num_classes)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), num_classes_(num_classes) {
  if (static_cast<std::size_t>(inputs_.cols()) != labels_.size()) {
    throw InvalidInput("dataset has " + std::to_string(inputs_.cols()) + " inputs but " +
                       std::to_string(labels_.size()) + " labels");
  }
  if (num_classes_ < 2) throw InvalidInput("dataset needs at least 2 classes");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw InvalidInput("label " + std::to_string(labels_[i]) + " of example " + std::to_string(i) +
                         " outside [0, " + std::to_string(num_classes_) + ")");
    }
    const double n = inputs_.col(static_cast<Eigen::Index>(i)).norm();
    if (!(n <= 1.0 + kNormSlack)) {
      throw InvalidInput("input " + std::to_string(i) + " has norm " + fmt_double(n) + " > 1");
    }
  }
}

Dataset Dataset::normalized(Eigen::MatrixXd raw_inputs, std::vector<int> labels, int num_classes) {
  if (!raw_inputs.allFinite()) throw InvalidInput("dataset contains non-finite features");
  double max_norm = 0.0;
  for (Eigen::Index i = 0; i < raw_inputs.cols(); ++i) {
    max_norm = std::max(max_norm, raw_inputs.col(i).norm());
  }
  double scale = 1.0;
  if (max_norm > 0.0) {
    scale = max_norm;
    raw_inputs /= scale;
    // Guard the last ulp so the ||x|| <= 1 invariant holds without slack.
    for (Eigen::Index i = 0; i < raw_inputs.cols(); ++i) {
      const double n = raw_inputs.col(i).norm();
      if (n > 1.0) raw_inputs.col(i) /= n;
    }
  }
  Dataset d(std::move(raw_inputs), std::move(labels), num_classes);
  d.input_scale_ = scale;
  return d;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Eigen::MatrixXd x(inputs_.rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<int> y;
  y.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = input(indices.at(k));
    y.push_back(labels_[indices[k]]);
  }
  Dataset d(std::move(x), std::move(y), num_classes_);
  d.input_scale_ = input_scale_;
  return d;
}

Dataset Dataset::repeated(std::size_t k) const {
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t i = 0; i < size(); ++i) idx.push_back(i);
  }
  return subset(idx);
}

Dataset make_blobs(const BlobsSpec& spec) {
  if (spec.num_classes < 2) throw InvalidInput("blobs: need at least 2 classes");
  if (spec.per_class < 1) throw InvalidInput("blobs: per-class count must be >= 1");
  if (spec.input_dim < 1) throw InvalidInput("blobs: input dimension must be >= 1");
  Rng rng(spec.seed);
  const auto d0 = static_cast<Eigen::Index>(spec.input_dim);
  Eigen::MatrixXd centres(d0, spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    Eigen::VectorXd u(d0);
    for (Eigen::Index k = 0; k < d0; ++k) u[k] = standard_normal(rng);
    const double n = u.norm();
    centres.col(c) = n > 0.0 ? Eigen::VectorXd(spec.separation * u / n) : Eigen::VectorXd::Zero(d0);
  }
  const std::size_t total = spec.per_class * static_cast<std::size_t>(spec.num_classes);
  Eigen::MatrixXd x(d0, static_cast<Eigen::Index>(total));
  std::vector<int> y(total);
  std::size_t i = 0;
  for (std::size_t r = 0; r < spec.per_class; ++r) {
    for (int c = 0; c < spec.num_classes; ++c, ++i) {
      for (Eigen::Index k = 0; k < d0; ++k) {
        x(k, static_cast<Eigen::Index>(i)) = centres(k, c) + standard_normal(rng);
      }
      y[i] = c;
    }
  }
  return Dataset::normalized(std::move(x), std::move(y), spec.num_classes);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s, std::size_t row, const std::string& col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("row " + std::to_string(row) + ", column '" + col + "': cannot parse '" + s + "'");
  }
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset " + path.string() + " is empty");
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end()) throw InvalidInput("dataset has no column named '" + label_column + "'");
  const auto label_idx = static_cast<std::size_t>(it - header.begin());
  const std::size_t d0 = header.size() - 1;
  if (d0 == 0) throw InvalidInput("dataset has no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidInput("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                         " cells, header has " + std::to_string(header.size()));
    }
    std::vector<double> feat;
    feat.reserve(d0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], row, header[c]);
      if (c == label_idx) {
        if (v != static_cast<int>(v)) throw InvalidInput("row " + std::to_string(row) + ": label must be an integer");
        labels.push_back(static_cast<int>(v));
      } else {
        feat.push_back(v);
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw InvalidInput("dataset " + path.string() + " has no rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d0), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d0; ++k) x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[i][k];
  }
  const int classes = std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
  return Dataset::normalized(std::move(x), std::move(labels), classes);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  for (std::size_t k = 0; k < data.input_dim(); ++k) out << 'x' << k << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < data.input_dim(); ++k) {
      out << fmt_double(data.inputs()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i))) << ',';
    }
    out << data.label(i) << '\n';
  }
}

}  // namespace ergodyn
