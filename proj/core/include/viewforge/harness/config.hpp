#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace viewforge::harness {

// Flat `section.key = value` configuration. Later lines override earlier
// ones; `#` starts a comment. Typed getters throw ConfigError on bad values.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  void erase(const std::string& key) { values_.erase(key); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const;

  // Keys starting with `prefix`, prefix stripped, in sorted order.
  std::map<std::string, std::string> section(const std::string& prefix) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  // Sorted `key = value` lines; parse(to_text()) reproduces the config.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(std::string_view text, char sep = ',');
std::string trim(std::string_view s);
double parse_double(std::string_view text, const std::string& what);
std::int64_t parse_int(std::string_view text, const std::string& what);

}  // namespace viewforge::harness
