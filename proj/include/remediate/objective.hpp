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

#ifndef REMEDIATE_OBJECTIVE_HPP_
#define REMEDIATE_OBJECTIVE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "remediate/scenario.hpp"

namespace remediate {

enum class ObjectiveKind {
  kWithinSetPairwise,
  kAcrossPopulationPairwise,
  kThresholdWithin,
  kThresholdAcross,
  kAggregateImpact,
};

enum class Sense { kMinimize, kMaximize };

// Which quantity a solve optimizes. The four disparity measures are
// minimized; aggregate impact is maximized.
class ObjectiveSpec {
 public:
  static ObjectiveSpec within_set_pairwise(bool ordered_pairs = false);
  static ObjectiveSpec across_population_pairwise(bool ordered_pairs = false);
  static ObjectiveSpec threshold_within(double kappa);
  static ObjectiveSpec threshold_across(double kappa);
  static ObjectiveSpec aggregate_impact();

  // Accepts the CLI names: within, across, threshold-within,
  // threshold-across, aggregate.
  static ObjectiveSpec parse(std::string_view name, std::optional<double> kappa,
                             bool ordered_pairs = false);

  ObjectiveKind kind() const { return kind_; }
  Sense sense() const;
  bool is_disparity() const { return kind_ != ObjectiveKind::kAggregateImpact; }
  bool is_threshold() const;
  bool is_pairwise() const;
  // Pair sums count each unordered pair twice when set.
  bool ordered_pairs() const { return ordered_pairs_; }
  std::optional<double> kappa() const { return kappa_; }
  std::string name() const;

 private:
  ObjectiveSpec(ObjectiveKind kind, std::optional<double> kappa, bool ordered_pairs)
      : kind_(kind), kappa_(kappa), ordered_pairs_(ordered_pairs) {}

  ObjectiveKind kind_;
  std::optional<double> kappa_;
  bool ordered_pairs_ = false;
};

// mu_k = (1/n_k) sum_i n_k^(i) E_ik over an m x r expected-outcome matrix.
// Throws DataError when some n_k is zero.
Eigen::VectorXd group_means(const Eigen::MatrixXd& expected, const Scenario& scenario);

// delta(E) for a disparity objective. Throws UsageError for aggregate impact.
double disparity(const Eigen::MatrixXd& expected, const Scenario& scenario,
                 const ObjectiveSpec& spec);

// Lower bound on delta over every matrix E with lower <= E <= upper
// (elementwise). disparity(E) == disparity_lower_bound(E, E) bit for bit,
// and the bound is monotone in floating point, so it never exceeds the
// computed value of any matrix inside the box.
double disparity_lower_bound(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper,
                             const Scenario& scenario, const ObjectiveSpec& spec);

// Population-mean expected outcome (1/n) sum_k sum_i n_k^(i) E_ik.
double aggregate_impact(const Eigen::MatrixXd& expected, const Scenario& scenario);

// Value of any objective; equals disparity() or aggregate_impact().
double objective_value(const Eigen::MatrixXd& expected, const Scenario& scenario,
                       const ObjectiveSpec& spec);

struct GroupChange {
  std::string group;
  double pre_mean = 0.0;
  double post_mean = 0.0;
  std::optional<double> pct_change;  // empty when pre_mean == 0
};

struct ChangeReport {
  std::vector<GroupChange> groups;
  GroupChange aggregate;
  double disparity_pre = 0.0;
  double disparity_post = 0.0;
};

ChangeReport change_report(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                           const Scenario& scenario, const ObjectiveSpec& disparity_spec);

// "+1.76", "-1.35", "+0.00", or "NA" for an undefined change.
std::string format_pct(const std::optional<double>& pct);

// CSV with header group,pre_mean,post_mean,pct_change; the last rows are
// "aggregate" and "disparity".
std::string report_csv(const ChangeReport& report);
// Fixed-width table for terminals.
std::string report_table(const ChangeReport& report);

}  // namespace remediate

#endif  // REMEDIATE_OBJECTIVE_HPP_
