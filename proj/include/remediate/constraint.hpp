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

#ifndef REMEDIATE_CONSTRAINT_HPP_
#define REMEDIATE_CONSTRAINT_HPP_

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "remediate/scenario.hpp"
#include "remediate/scm.hpp"

namespace remediate {

// sum_i z_i <= b.
struct Budget {
  std::size_t b = 0;
};

// mu_k(z) - mu_k(0) >= eta for every group.
struct NoHarmAcross {
  double eta = 0.0;
};

// E_ik(z) - E_ik(0) >= eta for each listed (set, group) cell; an empty list
// means every cell.
struct NoHarmWithin {
  double eta = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
};

// mu_k(z) >= kappa for every group.
struct MinRateAcross {
  double kappa = 0.0;
};

// E_ik(z) >= kappa for every cell.
struct MinRateWithin {
  double kappa = 0.0;
};

// c_ir' < tau for every set and every one-hot rho'. Needs the aggregate model.
struct CounterfactualPrivilege {
  double tau = 0.0;
};

using ConstraintSpec = std::variant<Budget, NoHarmAcross, NoHarmWithin, MinRateAcross,
                                    MinRateWithin, CounterfactualPrivilege>;

std::string describe(const ConstraintSpec& constraint);

// Signed slack of one constraint item. Budget, no-harm and minimum-rate items
// are satisfied at margin >= 0; privilege items need margin > 0 (strict).
struct ConstraintMargin {
  std::size_t constraint = 0;  // index into the constraint list
  std::string item;            // "", group label, "set/group", or "set/rho'=group"
  double margin = 0.0;
  bool satisfied = true;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<ConstraintMargin> margins;
  std::vector<ConstraintMargin> violations;
  // Sum of max(-margin, 0) over violated items.
  double total_violation = 0.0;
};

// Evaluates a constraint list against intervention vectors. Baselines (z = 0)
// and privilege terms are computed once at construction.
class ConstraintEvaluator {
 public:
  ConstraintEvaluator(const Scenario& scenario, const ResponseSurface& outcome,
                      const ResponseSurface* aggregate, std::vector<ConstraintSpec> constraints);

  const std::vector<ConstraintSpec>& constraints() const { return constraints_; }
  std::optional<std::size_t> budget() const { return budget_; }
  bool needs_aggregate() const;

  FeasibilityReport evaluate(const InterventionVector& z, const Eigen::MatrixXd& expected,
                             const Eigen::VectorXd& spill) const;
  bool satisfied(const InterventionVector& z, const Eigen::MatrixXd& expected,
                 const Eigen::VectorXd& spill) const;

  // True when every completion whose expected outcomes are at most upper and
  // whose spillover lies in [spill_lower, spill_upper] violates some
  // non-budget constraint. Conservative: false means "maybe feasible".
  bool provably_infeasible(const Eigen::MatrixXd& upper, const Eigen::VectorXd& spill_lower,
                           const Eigen::VectorXd& spill_upper) const;

 private:
  const Scenario& scenario_;
  std::vector<ConstraintSpec> constraints_;
  std::optional<std::size_t> budget_;
  Eigen::MatrixXd baseline_;
  std::optional<Eigen::VectorXd> baseline_means_;
  // Per privilege constraint: (set, rho' category, term).
  struct PrivilegeItem {
    std::size_t set;
    std::size_t category;
    LinearTerm term;
  };
  std::vector<PrivilegeItem> privilege_;
};

FeasibilityReport check_feasibility(const FittedModel& model, const Scenario& scenario,
                                    const NeighborStructure& neighbors,
                                    const InterventionVector& z,
                                    std::span<const ConstraintSpec> constraints,
                                    const FittedModel* aggregate_model = nullptr);

}  // namespace remediate

#endif  // REMEDIATE_CONSTRAINT_HPP_
