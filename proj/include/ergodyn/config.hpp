#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ergodyn {

/// Flat `key = value` run configuration. Lines starting with `#` (or the part
/// of a line after `#`) are comments. Unknown or repeated keys raise
/// ConfigError naming the key.
class ExperimentConfig {
 public:
  ExperimentConfig() = default;

  static ExperimentConfig parse(std::string_view text, std::string source = "<string>");
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Overrides (or adds) a key after parsing, e.g. from a command-line flag.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }
  /// The configuration text exactly as read.
  const std::string& text() const { return text_; }
  const std::string& source() const { return source_; }
  const std::vector<std::pair<std::string, std::string>>& overrides() const { return overrides_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key, std::vector<std::size_t> fallback) const;
  std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const;

  /// Parsed key/value map, the verbatim text and any overrides.
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string> values_;
  std::string text_;
  std::string source_;
  std::vector<std::pair<std::string, std::string>> overrides_;
};

const std::vector<std::string>& known_config_keys();

/// Splits on commas, trimming whitespace; empty items are dropped.
std::vector<std::string> split_list(std::string_view s);

}  // namespace ergodyn
