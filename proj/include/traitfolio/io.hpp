#pragma once

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "traitfolio/error.hpp"

namespace traitfolio::io {

// Shortest "%.{digits}g" text for a double. 17 digits round-trips exactly.
// digits == 0 gives the shortest text that parses back to the same double.
inline std::string format_double(double value, int digits = 0) {
  char buffer[64];
  if (digits == 0) {
    const auto r = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, r.ptr);
  }
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

inline double parse_double(std::string_view text, const std::string& context) {
  std::string owned(text);
  if (owned.empty()) throw ParseError(context + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(owned.c_str(), &end);
  if (end != owned.c_str() + owned.size() || errno == ERANGE) {
    throw ParseError(context + ": invalid number '" + owned + "'");
  }
  return value;
}

inline std::vector<std::string> split(std::string_view text, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(delimiter, start);
    fields.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Writes bytes verbatim (LF line endings are the caller's responsibility).
inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + path.parent_path().string() +
                    "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::vector<std::string> lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string line(text.substr(start, pos - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
    start = pos + 1;
  }
  return out;
}

// Parses a numeric CSV with a known header into rows of doubles.
inline std::vector<std::vector<double>> read_numeric_csv(
    const std::filesystem::path& path, std::string_view expected_header) {
  const auto rows = lines(read_file(path));
  if (rows.empty() || rows.front() != expected_header) {
    throw ParseError(path.string() + ": expected header '" +
                     std::string(expected_header) + "'");
  }
  const std::size_t columns = split(expected_header, ',').size();
  std::vector<std::vector<double>> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto fields = split(rows[i], ',');
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (fields.size() != columns) throw ParseError(where + ": wrong column count");
    std::vector<double> row;
    row.reserve(columns);
    for (const auto& field : fields) row.push_back(parse_double(field, where));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace traitfolio::io
