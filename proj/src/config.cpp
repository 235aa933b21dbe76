#include "milr/config.hpp"

#include <cstdlib>
#include <sstream>

#include "milr/errors.hpp"

namespace milr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig c;
  c.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(no) + ": expected 'key = value'");
    const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (k.empty()) throw ConfigError(origin + ":" + std::to_string(no) + ": empty key");
    if (c.values_.count(k)) throw ConfigError(origin + ":" + std::to_string(no) + ": duplicate key '" + k + "'");
    c.values_[k] = v;
  }
  return c;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path);
  }
  return parse(text, path);
}

std::string KeyValueConfig::get(const std::string& key, const std::string& def) const {
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  used_.insert(key);
  return it->second;
}

double KeyValueConfig::get(const std::string& key, double def) const {
  if (!has(key)) return def;
  const std::string s = get(key, std::string());
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end) throw ConfigError(origin_ + ": '" + key + "' is not a number: " + s);
  return v;
}

long long KeyValueConfig::get(const std::string& key, long long def) const {
  if (!has(key)) return def;
  const std::string s = get(key, std::string());
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end) throw ConfigError(origin_ + ": '" + key + "' is not an integer: " + s);
  return v;
}

int KeyValueConfig::get(const std::string& key, int def) const {
  return static_cast<int>(get(key, static_cast<long long>(def)));
}

bool KeyValueConfig::get(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const std::string s = get(key, std::string());
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(origin_ + ": '" + key + "' is not a boolean: " + s);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& def) const {
  if (!has(key)) return def;
  std::istringstream in(get(key, std::string()));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (*end) throw ConfigError(origin_ + ": '" + key + "' has a non-numeric entry: " + tok);
    out.push_back(v);
  }
  return out;
}

std::vector<int> KeyValueConfig::get_ints(const std::string& key, const std::vector<int>& def) const {
  if (!has(key)) return def;
  std::vector<int> out;
  for (double v : get_doubles(key, {})) {
    if (v != static_cast<int>(v)) throw ConfigError(origin_ + ": '" + key + "' must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void KeyValueConfig::check_all_used() const {
  std::string unknown;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  if (!unknown.empty()) throw ConfigError(origin_ + ": unknown keys: " + unknown);
}

}  // namespace milr
