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

#ifndef REMEDIATE_SOLVE_HPP_
#define REMEDIATE_SOLVE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "remediate/constraint.hpp"
#include "remediate/lp_format.hpp"
#include "remediate/objective.hpp"
#include "remediate/scenario.hpp"
#include "remediate/scm.hpp"

namespace remediate {

// Everything a solve reads. aggregate_model is only needed by the
// counterfactual privilege constraint.
struct ModelContext {
  const Scenario& scenario;
  const NeighborStructure& neighbors;
  const FittedModel& model;
  const FittedModel* aggregate_model = nullptr;
};

struct SolverOptions {
  std::size_t enumeration_limit = 2'000'000;
  unsigned threads = 1;  // enumeration workers
  std::uint64_t seed = 0;
  std::size_t restarts = 4;    // local search, including the greedy start
  std::size_t node_limit = 0;  // branch and bound; 0 means unlimited
};

struct SolverStats {
  std::string solver;
  std::size_t nodes_explored = 0;
  std::size_t candidates_evaluated = 0;
  std::size_t restarts = 0;
  double wall_seconds = 0.0;
  bool proven_optimal = false;
};

struct SolveResult {
  InterventionVector z_star;
  double objective_value = 0.0;
  bool feasible = false;
  Eigen::VectorXd pre_means;   // mu_k at z = 0
  Eigen::VectorXd post_means;  // mu_k at z_star
  FeasibilityReport feasibility;
  SolverStats stats;
  std::vector<std::string> warnings;
};

// One optimization instance assembled for the solvers: precomputed response
// surfaces, the constraint evaluator, and bound computations over partial
// assignments. Lower costs are better; cost is the objective for minimized
// measures and its negation for aggregate impact.
class SearchProblem {
 public:
  SearchProblem(const ModelContext& context, const ObjectiveSpec& objective,
                std::span<const ConstraintSpec> constraints);

  struct Evaluation {
    double value = 0.0;
    double cost = 0.0;
    bool feasible = false;
    double violation = 0.0;
  };

  std::size_t num_sets() const { return scenario_.num_sets(); }
  std::size_t budget() const { return budget_; }
  const ObjectiveSpec& objective() const { return objective_; }
  const Scenario& scenario() const { return scenario_; }

  Evaluation evaluate(const InterventionVector& z) const;

  // Partial assignment: -1 undecided, 0 or 1 fixed. When the fixed ones
  // already use the whole budget every undecided entry is treated as 0.
  double cost_lower_bound(const std::vector<std::int8_t>& partial) const;
  bool provably_infeasible(const std::vector<std::int8_t>& partial) const;

  SolveResult make_result(const InterventionVector& z, SolverStats stats,
                          std::vector<std::string> warnings = {}) const;

 private:
  struct Box {
    Eigen::VectorXd spill_lower;
    Eigen::VectorXd spill_upper;
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
  };
  Box box(const std::vector<std::int8_t>& partial) const;
  double cost_of(double value) const;

  const Scenario& scenario_;
  ObjectiveSpec objective_;
  ResponseSurface outcome_;
  std::optional<ResponseSurface> aggregate_;
  std::optional<ConstraintEvaluator> constraints_;
  std::size_t budget_ = 0;
};

// Exact: scans every z with sum(z) <= b in lexicographic order and keeps the
// first strictly best feasible one.
SolveResult solve_enumerate(const ModelContext& context, const ObjectiveSpec& objective,
                            std::span<const ConstraintSpec> constraints,
                            const SolverOptions& options = {});

// Exact branch and bound on z_0, z_1, ... (0 branch first) with interval
// bounds on the spillover terms. Same optimum and tie-break as enumeration.
SolveResult solve_branch_bound(const ModelContext& context, const ObjectiveSpec& objective,
                               std::span<const ConstraintSpec> constraints,
                               const SolverOptions& options = {});

// Greedy construction from z = 0 followed by add/drop/swap local search, plus
// seeded random restarts. Feasible whenever z = 0 is.
SolveResult solve_local_search(const ModelContext& context, const ObjectiveSpec& objective,
                               std::span<const ConstraintSpec> constraints,
                               const SolverOptions& options = {});

// The mixed-integer linear program equivalent to the instance.
lp::Model build_milp(const ModelContext& context, const ObjectiveSpec& objective,
                     std::span<const ConstraintSpec> constraints);

// Values of every LP variable implied by an intervention vector, for
// substitution checks against build_milp output.
lp::Assignment implied_assignment(const ModelContext& context, const ObjectiveSpec& objective,
                                  const InterventionVector& z);

void export_milp(const ModelContext& context, const ObjectiveSpec& objective,
                 std::span<const ConstraintSpec> constraints, const std::filesystem::path& path);

// sum_{j <= b} C(m, j), saturating at SIZE_MAX.
std::size_t count_candidates(std::size_t m, std::size_t b);

}  // namespace remediate

#endif  // REMEDIATE_SOLVE_HPP_
