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

#ifndef REMEDIATE_CSV_HPP_
#define REMEDIATE_CSV_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace remediate::csv {

// A parsed CSV file. Row numbers in error messages are 1-based file lines,
// so the header is line 1 and the first record is line 2.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  // Index of a named column; throws DataError naming the file if absent.
  std::size_t column(std::string_view name) const;
  std::string location(std::size_t row, std::size_t col) const;
};

Table read_file(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source);

// Requires the header to match exactly (order included).
void expect_header(const Table& table, const std::vector<std::string>& header);

double parse_double(const Table& table, std::size_t row, std::size_t col);
std::int64_t parse_int(const Table& table, std::size_t row, std::size_t col);
bool parse_binary(const Table& table, std::size_t row, std::size_t col);

// Shortest representation that reads back to the same double.
std::string format_double(double value);
// Fixed number of significant digits (17 round-trips every double).
std::string format_double(double value, int significant_digits);

// Writes one record, quoting fields that need it.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace remediate::csv

#endif  // REMEDIATE_CSV_HPP_
