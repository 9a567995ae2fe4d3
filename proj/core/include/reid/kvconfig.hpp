#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reid {

/// Flat `key = value` document. '#' starts a comment; blank lines are ignored; later keys override
/// earlier ones. Serialization is sorted by key, so equal configs print identically.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  std::optional<std::string> get(const std::string& key) const;
  /// Typed getters throw ConfigError naming the key on malformed values.
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// Keys not in `known`, for unknown-field errors.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

  /// Right-hand keys override left-hand ones.
  KeyValueConfig merged(const KeyValueConfig& overrides) const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace reid
