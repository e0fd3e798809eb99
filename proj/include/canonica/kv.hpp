#pragma once

// Plain-text key-value configuration: one `key = value` per line, `#`
// starts a comment. Insertion order is preserved on output.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace canonica {

class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValues load(const std::filesystem::path& path);

  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);
  // Later entries override earlier ones.
  void merge(const KeyValues& other);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       std::vector<std::string> fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  const std::string* find(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
std::vector<std::string> split_list(const std::string& text);

}  // namespace canonica
