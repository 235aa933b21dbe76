#include "milr/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "milr/errors.hpp"

namespace milr {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw DataError("not a number: '" + s + "'");
  return v;
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n") != std::string::npos) throw DataError("csv cell contains a separator: " + cells[i]);
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string to_csv(const CsvTable& t) {
  std::string out;
  for (const auto& [k, v] : t.config) out += "# " + k + " = " + v + "\n";
  out += join(t.header) + "\n";
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw DataError("csv row width does not match header");
    out += join(r) + "\n";
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (have_header) continue;
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) t.config.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    if (!have_header) {
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto r = split(line);
    if (r.size() != t.header.size()) throw DataError("csv row has " + std::to_string(r.size()) + " cells, header has " +
                                                     std::to_string(t.header.size()));
    t.rows.push_back(std::move(r));
  }
  if (!have_header) throw DataError("csv has no header row");
  return t;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f) throw DataError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_csv(const std::string& path, const CsvTable& t) { write_text(path, to_csv(t)); }
CsvTable read_csv(const std::string& path) { return parse_csv(read_text(path)); }

}  // namespace milr
