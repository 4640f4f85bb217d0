// Copyright 2026 The Remediate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "remediate/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "remediate/error.hpp"

namespace remediate::csv {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one logical record. Quoted fields may contain commas and doubled
// quotes but not newlines.
std::vector<std::string> split_record(std::string_view line, const std::string& source,
                                      std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? current : trim(current));
      current.clear();
      was_quoted = false;
    } else {
      current.push_back(ch);
    }
  }
  if (quoted) {
    throw DataError(source + ":" + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(was_quoted ? current : trim(current));
  return fields;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError(source + ": missing column '" + std::string(name) + "'");
}

std::string Table::location(std::size_t row, std::size_t col) const {
  std::string where = source + ":" + std::to_string(lines.at(row));
  if (col < header.size()) where += " column '" + header[col] + "'";
  return where;
}

Table parse(std::string_view text, std::string source) {
  Table table;
  table.source = std::move(source);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = end + 1;
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split_record(line, table.source, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size()) {
        throw DataError(table.source + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
      table.lines.push_back(line_no);
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw DataError(table.source + ": empty file, header expected");
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void expect_header(const Table& table, const std::vector<std::string>& header) {
  if (table.header != header) {
    std::string want;
    for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
    throw DataError(table.source + ":1: header must be '" + want + "'");
  }
}

double parse_double(const Table& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows.at(row).at(col);
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw DataError(table.location(row, col) + ": '" + s + "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw DataError(table.location(row, col) + ": value must be finite");
  }
  return value;
}

std::int64_t parse_int(const Table& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows.at(row).at(col);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DataError(table.location(row, col) + ": '" + s + "' is not an integer");
  }
  return value;
}

bool parse_binary(const Table& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows.at(row).at(col);
  if (s == "0") return false;
  if (s == "1") return true;
  throw DataError(table.location(row, col) + ": '" + s + "' must be 0 or 1");
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_double(double value, int significant_digits) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, significant_digits);
  (void)ec;
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char ch : f) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

}  // namespace remediate::csv
