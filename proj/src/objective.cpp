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

#include "remediate/objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"

namespace remediate {
namespace {

void check_kappa(double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw UsageError("kappa must lie in [0, 1], got " + csv::format_double(kappa));
  }
}

void check_shape(const Eigen::MatrixXd& e, const Scenario& scenario) {
  if (e.rows() != static_cast<Eigen::Index>(scenario.num_sets()) ||
      e.cols() != static_cast<Eigen::Index>(scenario.num_groups())) {
    throw UsageError("expected-outcome matrix is " + std::to_string(e.rows()) + "x" +
                     std::to_string(e.cols()) + ", scenario is " +
                     std::to_string(scenario.num_sets()) + "x" +
                     std::to_string(scenario.num_groups()));
  }
}

// Lower bound on |a - b| for a in [a_lo, a_hi], b in [b_lo, b_hi]; equals
// |a - b| exactly when both intervals are points.
inline double gap_lower_bound(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max(0.0, std::max(a_lo - b_hi, b_lo - a_hi));
}

}  // namespace

ObjectiveSpec ObjectiveSpec::within_set_pairwise(bool ordered_pairs) {
  return ObjectiveSpec(ObjectiveKind::kWithinSetPairwise, std::nullopt, ordered_pairs);
}

ObjectiveSpec ObjectiveSpec::across_population_pairwise(bool ordered_pairs) {
  return ObjectiveSpec(ObjectiveKind::kAcrossPopulationPairwise, std::nullopt, ordered_pairs);
}

ObjectiveSpec ObjectiveSpec::threshold_within(double kappa) {
  check_kappa(kappa);
  return ObjectiveSpec(ObjectiveKind::kThresholdWithin, kappa, false);
}

ObjectiveSpec ObjectiveSpec::threshold_across(double kappa) {
  check_kappa(kappa);
  return ObjectiveSpec(ObjectiveKind::kThresholdAcross, kappa, false);
}

ObjectiveSpec ObjectiveSpec::aggregate_impact() {
  return ObjectiveSpec(ObjectiveKind::kAggregateImpact, std::nullopt, false);
}

ObjectiveSpec ObjectiveSpec::parse(std::string_view name, std::optional<double> kappa,
                                   bool ordered_pairs) {
  auto need_kappa = [&]() {
    if (!kappa) throw UsageError("objective '" + std::string(name) + "' needs kappa");
    return *kappa;
  };
  if (name == "within") return within_set_pairwise(ordered_pairs);
  if (name == "across") return across_population_pairwise(ordered_pairs);
  if (name == "threshold-within") return threshold_within(need_kappa());
  if (name == "threshold-across") return threshold_across(need_kappa());
  if (name == "aggregate") return aggregate_impact();
  throw UsageError("unknown objective '" + std::string(name) +
                   "' (within, across, threshold-within, threshold-across, aggregate)");
}

Sense ObjectiveSpec::sense() const {
  return kind_ == ObjectiveKind::kAggregateImpact ? Sense::kMaximize : Sense::kMinimize;
}

bool ObjectiveSpec::is_threshold() const {
  return kind_ == ObjectiveKind::kThresholdWithin || kind_ == ObjectiveKind::kThresholdAcross;
}

bool ObjectiveSpec::is_pairwise() const {
  return kind_ == ObjectiveKind::kWithinSetPairwise ||
         kind_ == ObjectiveKind::kAcrossPopulationPairwise;
}

std::string ObjectiveSpec::name() const {
  switch (kind_) {
    case ObjectiveKind::kWithinSetPairwise:
      return "within";
    case ObjectiveKind::kAcrossPopulationPairwise:
      return "across";
    case ObjectiveKind::kThresholdWithin:
      return "threshold-within";
    case ObjectiveKind::kThresholdAcross:
      return "threshold-across";
    case ObjectiveKind::kAggregateImpact:
      return "aggregate";
  }
  return "unknown";
}

Eigen::VectorXd group_means(const Eigen::MatrixXd& expected, const Scenario& scenario) {
  check_shape(expected, scenario);
  const auto m = expected.rows();
  const auto r = expected.cols();
  Eigen::VectorXd means(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    double total = 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = scenario.weight(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
      total += w;
      acc += w * expected(i, k);
    }
    if (!(total > 0.0)) {
      throw DataError("group '" + scenario.groups()[static_cast<std::size_t>(k)] +
                      "' is empty (n_k = 0)");
    }
    means(k) = acc / total;
  }
  return means;
}

double disparity_lower_bound(const Eigen::MatrixXd& lower, const Eigen::MatrixXd& upper,
                             const Scenario& scenario, const ObjectiveSpec& spec) {
  check_shape(lower, scenario);
  check_shape(upper, scenario);
  const auto m = lower.rows();
  const auto r = lower.cols();
  double total = 0.0;
  switch (spec.kind()) {
    case ObjectiveKind::kAcrossPopulationPairwise: {
      const Eigen::VectorXd lo = group_means(lower, scenario);
      const Eigen::VectorXd hi = group_means(upper, scenario);
      for (Eigen::Index k = 0; k < r; ++k) {
        for (Eigen::Index q = k + 1; q < r; ++q) {
          total += gap_lower_bound(lo(k), hi(k), lo(q), hi(q));
        }
      }
      return spec.ordered_pairs() ? 2.0 * total : total;
    }
    case ObjectiveKind::kWithinSetPairwise: {
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < r; ++k) {
          for (Eigen::Index q = k + 1; q < r; ++q) {
            total += gap_lower_bound(lower(i, k), upper(i, k), lower(i, q), upper(i, q));
          }
        }
      }
      return spec.ordered_pairs() ? 2.0 * total : total;
    }
    case ObjectiveKind::kThresholdWithin: {
      const double kappa = *spec.kappa();
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < r; ++k) total += std::max(kappa - upper(i, k), 0.0);
      }
      return total;
    }
    case ObjectiveKind::kThresholdAcross: {
      const double kappa = *spec.kappa();
      const Eigen::VectorXd hi = group_means(upper, scenario);
      for (Eigen::Index k = 0; k < r; ++k) total += std::max(kappa - hi(k), 0.0);
      return total;
    }
    case ObjectiveKind::kAggregateImpact:
      break;
  }
  throw UsageError("aggregate impact is not a disparity measure");
}

double disparity(const Eigen::MatrixXd& expected, const Scenario& scenario,
                 const ObjectiveSpec& spec) {
  return disparity_lower_bound(expected, expected, scenario, spec);
}

double aggregate_impact(const Eigen::MatrixXd& expected, const Scenario& scenario) {
  check_shape(expected, scenario);
  double total = 0.0;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < expected.cols(); ++k) {
    for (Eigen::Index i = 0; i < expected.rows(); ++i) {
      const double w = scenario.weight(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
      total += w;
      acc += w * expected(i, k);
    }
  }
  if (!(total > 0.0)) throw DataError("scenario has no individuals (n = 0)");
  return acc / total;
}

double objective_value(const Eigen::MatrixXd& expected, const Scenario& scenario,
                       const ObjectiveSpec& spec) {
  if (spec.kind() == ObjectiveKind::kAggregateImpact) return aggregate_impact(expected, scenario);
  return disparity(expected, scenario, spec);
}

ChangeReport change_report(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                           const Scenario& scenario, const ObjectiveSpec& disparity_spec) {
  if (!disparity_spec.is_disparity()) {
    throw UsageError("change_report needs a disparity measure for its disparity rows");
  }
  auto pct = [](double before, double after) -> std::optional<double> {
    if (before == 0.0) return std::nullopt;
    return 100.0 * (after - before) / before;
  };
  const Eigen::VectorXd mu_pre = group_means(pre, scenario);
  const Eigen::VectorXd mu_post = group_means(post, scenario);
  ChangeReport report;
  for (std::size_t k = 0; k < scenario.num_groups(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    report.groups.push_back(
        {scenario.groups()[k], mu_pre(kk), mu_post(kk), pct(mu_pre(kk), mu_post(kk))});
  }
  const double agg_pre = aggregate_impact(pre, scenario);
  const double agg_post = aggregate_impact(post, scenario);
  report.aggregate = {"aggregate", agg_pre, agg_post, pct(agg_pre, agg_post)};
  report.disparity_pre = disparity(pre, scenario, disparity_spec);
  report.disparity_post = disparity(post, scenario, disparity_spec);
  return report;
}

std::string format_pct(const std::optional<double>& pct) {
  if (!pct) return "NA";
  double v = *pct;
  if (std::fabs(v) < 0.005) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.2f", v);
  return buf;
}

std::string report_csv(const ChangeReport& report) {
  std::ostringstream out;
  csv::write_row(out, {"group", "pre_mean", "post_mean", "pct_change"});
  for (const auto& g : report.groups) {
    csv::write_row(out, {g.group, csv::format_double(g.pre_mean), csv::format_double(g.post_mean),
                         format_pct(g.pct_change)});
  }
  const auto& a = report.aggregate;
  csv::write_row(out, {"aggregate", csv::format_double(a.pre_mean),
                       csv::format_double(a.post_mean), format_pct(a.pct_change)});
  std::optional<double> dpct;
  if (report.disparity_pre != 0.0) {
    dpct = 100.0 * (report.disparity_post - report.disparity_pre) / report.disparity_pre;
  }
  csv::write_row(out, {"disparity", csv::format_double(report.disparity_pre),
                       csv::format_double(report.disparity_post), format_pct(dpct)});
  return out.str();
}

std::string report_table(const ChangeReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %12s %12s %10s\n", "group", "pre", "post", "change%");
  out << line;
  auto row = [&](const GroupChange& g) {
    std::snprintf(line, sizeof(line), "%-12s %12.6f %12.6f %10s\n", g.group.c_str(), g.pre_mean,
                  g.post_mean, format_pct(g.pct_change).c_str());
    out << line;
  };
  for (const auto& g : report.groups) row(g);
  row(report.aggregate);
  std::snprintf(line, sizeof(line), "%-12s %12.6f %12.6f\n", "disparity", report.disparity_pre,
                report.disparity_post);
  out << line;
  return out.str();
}

}  // namespace remediate
