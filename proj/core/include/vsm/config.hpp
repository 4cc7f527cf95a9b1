#pragma once

// Flat `key = value` configuration files. Lines starting with '#' are comments.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace vsm {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig from_file(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;

  // Throws std::invalid_argument when the key exists but does not parse.
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// The documented default configuration, embedded in the binary.
std::string_view default_config_text();

}  // namespace vsm
