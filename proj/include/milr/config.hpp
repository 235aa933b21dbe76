#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "milr/csv.hpp"

namespace milr {

// Flat key = value file. '#' starts a comment; blank lines are ignored.
// Lookups record the key as used so leftover (misspelled) keys can be reported.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& def) const;
  double get(const std::string& key, double def) const;
  int get(const std::string& key, int def) const;
  long long get(const std::string& key, long long def) const;
  bool get(const std::string& key, bool def) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& def) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) const;

  // Throws ConfigError naming keys that were never read.
  void check_all_used() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

// Config header helper: values rendered in insertion order.
class ResolvedConfig {
 public:
  template <class T>
  void add(const std::string& key, const T& v) {
    entries_.emplace_back(key, render(v));
  }
  const ConfigHeader& entries() const { return entries_; }

 private:
  static std::string render(const std::string& s) { return s; }
  static std::string render(const char* s) { return s; }
  static std::string render(double v) { return fmt(v); }
  static std::string render(bool v) { return v ? "true" : "false"; }
  template <class I>
  static std::string render(I v) {
    return std::to_string(v);
  }
  template <class E>
  static std::string render(const std::vector<E>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + render(v[i]);
    return s;
  }
  ConfigHeader entries_;
};

}  // namespace milr
