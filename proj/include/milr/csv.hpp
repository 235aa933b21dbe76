#pragma once

#include <string>
#include <utility>
#include <vector>

namespace milr {

using ConfigHeader = std::vector<std::pair<std::string, std::string>>;

// Comment lines ("# key = value") precede the header row; cells never contain commas.
struct CsvTable {
  ConfigHeader config;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

// %.17g, so parsing the text back reproduces the double exactly; "nan"/"inf" for non-finite values.
std::string fmt(double v);
std::string fmt(long long v);
std::string fmt(bool v);
double parse_double(const std::string& s);

std::string to_csv(const CsvTable& t);
CsvTable parse_csv(const std::string& text);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_csv(const std::string& path, const CsvTable& t);
CsvTable read_csv(const std::string& path);

}  // namespace milr
