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

#include "remediate/constraint.hpp"

#include <algorithm>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"
#include "remediate/objective.hpp"

namespace remediate {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool references_means(const ConstraintSpec& c) {
  return std::holds_alternative<NoHarmAcross>(c) || std::holds_alternative<MinRateAcross>(c);
}

}  // namespace

std::string describe(const ConstraintSpec& constraint) {
  return std::visit(
      Overloaded{
          [](const Budget& c) { return "budget(b=" + std::to_string(c.b) + ")"; },
          [](const NoHarmAcross& c) {
            return "no_harm_across(eta=" + csv::format_double(c.eta) + ")";
          },
          [](const NoHarmWithin& c) {
            return "no_harm_within(eta=" + csv::format_double(c.eta) + ", cells=" +
                   (c.cells.empty() ? std::string("all") : std::to_string(c.cells.size())) + ")";
          },
          [](const MinRateAcross& c) {
            return "min_rate_across(kappa=" + csv::format_double(c.kappa) + ")";
          },
          [](const MinRateWithin& c) {
            return "min_rate_within(kappa=" + csv::format_double(c.kappa) + ")";
          },
          [](const CounterfactualPrivilege& c) {
            return "counterfactual_privilege(tau=" + csv::format_double(c.tau) + ")";
          },
      },
      constraint);
}

ConstraintEvaluator::ConstraintEvaluator(const Scenario& scenario, const ResponseSurface& outcome,
                                         const ResponseSurface* aggregate,
                                         std::vector<ConstraintSpec> constraints)
    : scenario_(scenario), constraints_(std::move(constraints)) {
  const std::size_t m = scenario.num_sets();
  const std::size_t r = scenario.num_groups();
  bool any_means = false;
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    const auto& spec = constraints_[c];
    if (const auto* b = std::get_if<Budget>(&spec)) {
      if (b->b > m) {
        throw UsageError("budget b=" + std::to_string(b->b) + " exceeds the number of sets m=" +
                         std::to_string(m));
      }
      budget_ = budget_ ? std::min(*budget_, b->b) : b->b;
    }
    if (auto* nh = std::get_if<NoHarmWithin>(&constraints_[c])) {
      if (nh->cells.empty()) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < r; ++k) nh->cells.emplace_back(i, k);
        }
      }
      for (const auto& [i, k] : nh->cells) {
        if (i >= m || k >= r) throw UsageError("no_harm_within cell out of range");
      }
    }
    if (std::holds_alternative<CounterfactualPrivilege>(spec)) {
      if (aggregate == nullptr) {
        throw UsageError(
            "counterfactual privilege constraint needs the aggregate model (DIP mode)");
      }
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < r; ++k) {
          Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r));
          one_hot(static_cast<Eigen::Index>(k)) = 1.0;
          privilege_.push_back({i, k, aggregate->privilege(i, one_hot)});
        }
      }
    }
    any_means = any_means || references_means(spec);
  }
  baseline_ = outcome.expected(outcome.spillover(InterventionVector(m)));
  if (any_means) baseline_means_ = group_means(baseline_, scenario);
}

bool ConstraintEvaluator::needs_aggregate() const {
  return std::any_of(constraints_.begin(), constraints_.end(), [](const ConstraintSpec& c) {
    return std::holds_alternative<CounterfactualPrivilege>(c);
  });
}

FeasibilityReport ConstraintEvaluator::evaluate(const InterventionVector& z,
                                                const Eigen::MatrixXd& expected,
                                                const Eigen::VectorXd& spill) const {
  FeasibilityReport report;
  const auto& groups = scenario_.groups();
  std::optional<Eigen::VectorXd> means;
  auto get_means = [&]() -> const Eigen::VectorXd& {
    if (!means) means = group_means(expected, scenario_);
    return *means;
  };
  auto cell = [&](std::size_t i, std::size_t k) {
    return scenario_.set(i).id + "/" + groups[k];
  };
  auto add = [&](std::size_t c, std::string item, double margin, bool ok) {
    report.margins.push_back({c, std::move(item), margin, ok});
    if (!ok) {
      report.feasible = false;
      report.violations.push_back(report.margins.back());
      report.total_violation += std::max(-margin, 0.0);
    }
  };
  std::size_t privilege_index = 0;
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    std::visit(
        Overloaded{
            [&](const Budget& b) {
              const double margin =
                  static_cast<double>(b.b) - static_cast<double>(z.count());
              add(c, "", margin, margin >= 0.0);
            },
            [&](const NoHarmAcross& nh) {
              const auto& mu = get_means();
              for (std::size_t k = 0; k < groups.size(); ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                const double margin = (mu(kk) - (*baseline_means_)(kk)) - nh.eta;
                add(c, groups[k], margin, margin >= 0.0);
              }
            },
            [&](const NoHarmWithin& nh) {
              for (const auto& [i, k] : nh.cells) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto kk = static_cast<Eigen::Index>(k);
                const double margin = (expected(ii, kk) - baseline_(ii, kk)) - nh.eta;
                add(c, cell(i, k), margin, margin >= 0.0);
              }
            },
            [&](const MinRateAcross& mr) {
              const auto& mu = get_means();
              for (std::size_t k = 0; k < groups.size(); ++k) {
                const double margin = mu(static_cast<Eigen::Index>(k)) - mr.kappa;
                add(c, groups[k], margin, margin >= 0.0);
              }
            },
            [&](const MinRateWithin& mr) {
              for (std::size_t i = 0; i < scenario_.num_sets(); ++i) {
                for (std::size_t k = 0; k < groups.size(); ++k) {
                  const double margin =
                      expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                      mr.kappa;
                  add(c, cell(i, k), margin, margin >= 0.0);
                }
              }
            },
            [&](const CounterfactualPrivilege& cp) {
              const std::size_t items = scenario_.num_sets() * groups.size();
              for (std::size_t n = 0; n < items; ++n, ++privilege_index) {
                const auto& p = privilege_[privilege_index];
                const double value =
                    p.term.slope * spill(static_cast<Eigen::Index>(p.set)) + p.term.offset;
                add(c, scenario_.set(p.set).id + "/rho'=" + groups[p.category], cp.tau - value,
                    value < cp.tau);
              }
            },
        },
        constraints_[c]);
  }
  return report;
}

bool ConstraintEvaluator::satisfied(const InterventionVector& z, const Eigen::MatrixXd& expected,
                                    const Eigen::VectorXd& spill) const {
  std::optional<Eigen::VectorXd> means;
  auto get_means = [&]() -> const Eigen::VectorXd& {
    if (!means) means = group_means(expected, scenario_);
    return *means;
  };
  std::size_t privilege_index = 0;
  for (const auto& spec : constraints_) {
    const bool ok = std::visit(
        Overloaded{
            [&](const Budget& b) { return z.count() <= b.b; },
            [&](const NoHarmAcross& nh) {
              const auto& mu = get_means();
              for (Eigen::Index k = 0; k < mu.size(); ++k) {
                if (!((mu(k) - (*baseline_means_)(k)) - nh.eta >= 0.0)) return false;
              }
              return true;
            },
            [&](const NoHarmWithin& nh) {
              for (const auto& [i, k] : nh.cells) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto kk = static_cast<Eigen::Index>(k);
                if (!((expected(ii, kk) - baseline_(ii, kk)) - nh.eta >= 0.0)) return false;
              }
              return true;
            },
            [&](const MinRateAcross& mr) {
              const auto& mu = get_means();
              for (Eigen::Index k = 0; k < mu.size(); ++k) {
                if (!(mu(k) - mr.kappa >= 0.0)) return false;
              }
              return true;
            },
            [&](const MinRateWithin& mr) {
              return (expected.array() - mr.kappa >= 0.0).all();
            },
            [&](const CounterfactualPrivilege& cp) {
              const std::size_t items = scenario_.num_sets() * scenario_.num_groups();
              bool all = true;
              for (std::size_t n = 0; n < items; ++n, ++privilege_index) {
                const auto& p = privilege_[privilege_index];
                const double value =
                    p.term.slope * spill(static_cast<Eigen::Index>(p.set)) + p.term.offset;
                if (!(value < cp.tau)) all = false;
              }
              return all;
            },
        },
        spec);
    if (!ok) return false;
  }
  return true;
}

bool ConstraintEvaluator::provably_infeasible(const Eigen::MatrixXd& upper,
                                              const Eigen::VectorXd& spill_lower,
                                              const Eigen::VectorXd& spill_upper) const {
  std::optional<Eigen::VectorXd> means;
  auto get_means = [&]() -> const Eigen::VectorXd& {
    if (!means) means = group_means(upper, scenario_);
    return *means;
  };
  std::size_t privilege_index = 0;
  for (const auto& spec : constraints_) {
    const bool dead = std::visit(
        Overloaded{
            [&](const Budget&) { return false; },
            [&](const NoHarmAcross& nh) {
              const auto& mu = get_means();
              for (Eigen::Index k = 0; k < mu.size(); ++k) {
                if ((mu(k) - (*baseline_means_)(k)) - nh.eta < 0.0) return true;
              }
              return false;
            },
            [&](const NoHarmWithin& nh) {
              for (const auto& [i, k] : nh.cells) {
                const auto ii = static_cast<Eigen::Index>(i);
                const auto kk = static_cast<Eigen::Index>(k);
                if ((upper(ii, kk) - baseline_(ii, kk)) - nh.eta < 0.0) return true;
              }
              return false;
            },
            [&](const MinRateAcross& mr) {
              const auto& mu = get_means();
              for (Eigen::Index k = 0; k < mu.size(); ++k) {
                if (mu(k) - mr.kappa < 0.0) return true;
              }
              return false;
            },
            [&](const MinRateWithin& mr) { return (upper.array() - mr.kappa < 0.0).any(); },
            [&](const CounterfactualPrivilege& cp) {
              const std::size_t items = scenario_.num_sets() * scenario_.num_groups();
              bool any = false;
              for (std::size_t n = 0; n < items; ++n, ++privilege_index) {
                const auto& p = privilege_[privilege_index];
                const auto ii = static_cast<Eigen::Index>(p.set);
                const double spill = p.term.slope >= 0.0 ? spill_lower(ii) : spill_upper(ii);
                if (p.term.slope * spill + p.term.offset >= cp.tau) any = true;
              }
              return any;
            },
        },
        spec);
    if (dead) return true;
  }
  return false;
}

FeasibilityReport check_feasibility(const FittedModel& model, const Scenario& scenario,
                                    const NeighborStructure& neighbors,
                                    const InterventionVector& z,
                                    std::span<const ConstraintSpec> constraints,
                                    const FittedModel* aggregate_model) {
  const ResponseSurface outcome(model, scenario, neighbors);
  std::optional<ResponseSurface> aggregate;
  if (aggregate_model != nullptr) aggregate.emplace(*aggregate_model, scenario, neighbors);
  const ConstraintEvaluator evaluator(scenario, outcome, aggregate ? &*aggregate : nullptr,
                                      {constraints.begin(), constraints.end()});
  const Eigen::VectorXd spill = outcome.spillover(z);
  return evaluator.evaluate(z, outcome.expected(spill), spill);
}

}  // namespace remediate
