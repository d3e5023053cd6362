#include "ergodyn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ergodyn/errors.hpp"

namespace ergodyn {

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      // run
      "experiment", "objective", "dataset", "label_column", "out_dir", "seed", "save_trajectory",
      // synthetic data
      "blobs_classes", "blobs_dim", "blobs_per_class", "blobs_separation", "blobs_seed",
      // model
      "widths", "activations", "init", "init_scale", "init_box", "init_point", "sin_amplitude", "quadratic_diag", "bn_epsilon",
      // dynamics
      "eta0", "schedule", "schedule_factor", "schedule_period_epochs", "schedule_total_steps", "gamma",
      "batch_size", "sampling", "steps", "stride",
      // diagnostics
      "diag_every", "sample_size", "sharpness", "sharpness_every", "sharpness_tol", "sharpness_iters",
      "precision_sizes", "precision_resamples",
      // measures
      "phi", "phi_bound", "delta", "n_grid", "estimator", "measure_first", "resamples", "projections",
      // theorems
      "theorem", "init_radius_factor", "window", "tol", "c_grid", "samples", "eps_stat", "m_hat_pairs",
      "ce_dims", "ce_trials",
      // sweeps
      "sweep_axis", "sweep_values", "sweep_experiment", "workers"};
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool known(const std::string& key) {
  const auto& k = known_config_keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + what);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad_value(key, s, "a number");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad_value(key, s, "a non-negative integer");
  return v;
}

}  // namespace

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, std::string source) {
  ExperimentConfig cfg;
  cfg.text_ = std::string(text);
  cfg.source_ = std::move(source);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(cfg.source_ + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(cfg.source_ + ":" + std::to_string(lineno) + ": empty key");
    if (!known(key)) {
      throw ConfigError(cfg.source_ + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
    }
    if (cfg.values_.count(key)) {
      throw ConfigError(cfg.source_ + ":" + std::to_string(lineno) + ": duplicate config key '" + key + "'");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
  overrides_.emplace_back(key, value);
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string ExperimentConfig::require_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_u64(key, it->second);
}

std::size_t ExperimentConfig::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key, std::vector<double> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(it->second)) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::size_t> ExperimentConfig::get_sizes(const std::string& key,
                                                     std::vector<std::size_t> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : split_list(it->second)) out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  return out;
}

std::vector<std::string> ExperimentConfig::get_strings(const std::string& key,
                                                       std::vector<std::string> fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : split_list(it->second);
}

nlohmann::json ExperimentConfig::to_json() const {
  // The output directory is left out so that artifacts do not depend on where they are written.
  nlohmann::json over = nlohmann::json::array();
  for (const auto& [k, v] : overrides_) {
    if (k != "out_dir") over.push_back({{"key", k}, {"value", v}});
  }
  auto vals = values_;
  vals.erase("out_dir");
  return {{"source", std::filesystem::path(source_).filename().string()},
          {"text", text_},
          {"values", vals},
          {"overrides", over}};
}

}  // namespace ergodyn
