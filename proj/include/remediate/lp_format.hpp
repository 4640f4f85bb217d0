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

#ifndef REMEDIATE_LP_FORMAT_HPP_
#define REMEDIATE_LP_FORMAT_HPP_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "remediate/objective.hpp"

namespace remediate::lp {

struct Term {
  std::string var;
  double coef = 0.0;
  friend bool operator==(const Term&, const Term&) = default;
};

enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

struct Row {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
  friend bool operator==(const Row&, const Row&) = default;
};

struct Bound {
  std::string var;
  std::optional<double> lower;
  std::optional<double> upper;
  friend bool operator==(const Bound&, const Bound&) = default;
};

// A linear program in the subset of CPLEX LP syntax this project writes:
// one objective with an optional constant, named rows, variable bounds and a
// binary section. Variables without a bound entry default to [0, +inf).
struct Model {
  Sense sense = Sense::kMinimize;
  std::string objective_name = "obj";
  std::vector<Term> objective;
  double objective_constant = 0.0;
  std::vector<Row> rows;
  std::vector<Bound> bounds;
  std::vector<std::string> binaries;
  friend bool operator==(const Model&, const Model&) = default;
};

// Coefficients use 17 significant digits so read(write(m)) == m.
std::string write(const Model& model);
Model read(std::string_view text);

using Assignment = std::map<std::string, double>;

// Missing variables count as zero.
double objective_value(const Model& model, const Assignment& values);
double row_activity(const Row& row, const Assignment& values);
// Largest amount by which any row or bound is violated (0 when feasible).
double max_violation(const Model& model, const Assignment& values);

// Replaces characters outside [A-Za-z0-9_.] with '_'.
std::string sanitize_name(std::string_view raw);

}  // namespace remediate::lp

#endif  // REMEDIATE_LP_FORMAT_HPP_
