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

#ifndef REMEDIATE_TESTS_SUPPORT_HPP_
#define REMEDIATE_TESTS_SUPPORT_HPP_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "remediate/scenario.hpp"
#include "remediate/scm.hpp"

namespace testing {

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("remediate-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Sets on a line of longitudes at the equator; counts per (set, group).
inline remediate::Scenario line_scenario(const std::vector<std::vector<std::int64_t>>& counts,
                                         const std::vector<std::vector<double>>& rates,
                                         int neighbor_k = 5, std::vector<bool> calc = {}) {
  std::vector<remediate::InterventionSet> sets;
  std::vector<remediate::GroupSlice> slices;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::string id = "s" + std::to_string(10 + i);
    sets.push_back({id, 0.0, 0.01 * static_cast<double>(i), 0.0, false,
                    calc.empty() ? false : static_cast<bool>(calc[i])});
    for (std::size_t k = 0; k < counts[i].size(); ++k) {
      slices.push_back({id, std::string(1, static_cast<char>('A' + k)), counts[i][k], rates[i][k]});
    }
  }
  return remediate::Scenario(sets, slices, neighbor_k);
}

inline remediate::InterventionVector random_z(std::mt19937_64& rng, std::size_t m, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  remediate::InterventionVector z(m);
  for (std::size_t j = 0; j < m; ++j) z.set(j, coin(rng));
  return z;
}

// The eight target expectations for the career-fair example, rows are
// universities and columns groups A, B.
inline Eigen::MatrixXd stated_toy_expectations(const std::string& z) {
  Eigen::MatrixXd e(2, 2);
  if (z == "10") {
    e << 0.20, 0.30, 0.10, 0.15;
  } else {
    e << 0.15, 0.25, 0.15, 0.15;
  }
  return e;
}

}  // namespace testing

#endif  // REMEDIATE_TESTS_SUPPORT_HPP_
