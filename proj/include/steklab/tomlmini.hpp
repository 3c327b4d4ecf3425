#pragma once

// Minimal TOML subset sufficient for run configuration files: [section]
// headers, `key = value` pairs with integer, float, boolean, string and
// single-line scalar-array values, and # comments. Keys are flattened to
// "section.key". Anything outside the subset is a Config error with a line
// number.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "steklab/core.hpp"

namespace steklab::toml {

struct Value {
  enum class Kind { Int, Float, Bool, String, Array };
  Kind kind = Kind::Int;
  std::int64_t i = 0;
  double d = 0.0;
  bool b = false;
  std::string s;
  std::vector<Value> arr;
};

class Table {
 public:
  bool has(const std::string& key) const { return map_.count(key) != 0; }

  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;  // coerces Int
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::int64_t> get_int_array(const std::string& key) const;
  std::vector<double> get_double_array(const std::string& key) const;

  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;

  std::vector<std::string> keys() const;
  void set(const std::string& key, Value v) { map_[key] = std::move(v); }

 private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> map_;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace steklab::toml
