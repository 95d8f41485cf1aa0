#pragma once

#include <map>
#include <string>
#include <vector>

namespace glassbox::config {

// Flat key-value configuration with nested sections:
//
//   # comment
//   seed = 42
//   [gti]
//   folds = 5
//
// Section headers prefix the keys that follow them, so "folds" above is
// addressed as "gti.folds".  Values are stored verbatim and converted on
// access.  Lists are comma-separated ("penalties = 2, 3, 5").
class File {
 public:
  File() = default;

  static File parse(const std::string& text);
  static File load(const std::string& path);
  void save(const std::string& path) const;

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_reals(const std::string& key, const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, long long value);
  void set_real(const std::string& key, double value);

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace glassbox::config
