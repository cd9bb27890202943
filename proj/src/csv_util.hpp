#pragma once

#include <charconv>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctmf::detail {

inline std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

struct RowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double parse_double(const std::string& field, const char* what) {
  if (field.empty()) throw RowError(std::string(what) + " is empty");
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0')
    throw RowError(std::string(what) + " is not a number: '" + field + "'");
  return v;
}

inline int parse_int(const std::string& field, const char* what) {
  const double v = parse_double(field, what);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw RowError(std::string(what) + " is not an integer: '" + field + "'");
  return i;
}

}  // namespace ctmf::detail
