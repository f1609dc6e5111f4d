#pragma once

// Minimal RFC 4180 reader/writer. Fields containing a comma, quote or
// newline are quoted; embedded quotes are doubled.

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"

namespace facade_affect::csv {

using Row = std::vector<std::string>;

inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    // A bare blank line is skipped rather than read as one empty field.
    if (row_has_content || row.size() > 1 || !row.front().empty()) rows.push_back(std::move(row));
    row.clear();
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw ValidationError("csv: unterminated quoted field");
  if (row_has_content || !field.empty() || !row.empty()) end_row();
  return rows;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

inline std::vector<Row> read(const std::filesystem::path& path) { return parse(read_file(path)); }

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_row(const Row& row) {
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line.push_back(',');
    line += escape(row[i]);
  }
  line.push_back('\n');
  return line;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) { return fmt::format("{}", v); }

inline std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || errno == ERANGE) return std::nullopt;
  return v;
}

// Maps header names to column indices; throws naming the first missing column.
class Header {
public:
  Header(const Row& header, const std::vector<std::string_view>& required, std::string_view what) {
    for (auto name : required) {
      bool found = false;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
          columns_.emplace_back(std::string(name), i);
          found = true;
          break;
        }
      }
      if (!found) throw ValidationError(fmt::format("{}: missing column '{}'", what, name));
    }
  }

  std::size_t operator[](std::string_view name) const {
    for (const auto& [n, i] : columns_)
      if (n == name) return i;
    throw ValidationError(fmt::format("unknown column '{}'", name));
  }

private:
  std::vector<std::pair<std::string, std::size_t>> columns_;
};

}  // namespace facade_affect::csv
