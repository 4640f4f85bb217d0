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

#include <doctest.h>

#include <cmath>
#include <random>

#include "remediate/constraint.hpp"
#include "remediate/error.hpp"
#include "remediate/synth.hpp"
#include "support.hpp"

using namespace remediate;

namespace {

struct Toy {
  GroundTruth truth = gen_toy_career_fair();
  NeighborStructure neighbors = build_neighbor_structure(truth.scenario);

  FeasibilityReport check(const char* z, std::vector<ConstraintSpec> constraints) const {
    return check_feasibility(truth.model, truth.scenario, neighbors, InterventionVector::from_string(z),
                             constraints);
  }
};

FittedModel constant_aggregate(const Scenario& s, double a, double b, double g, double t) {
  CoefficientBlock c = CoefficientBlock::zeros(s.num_groups());
  c.alpha.setConstant(a);
  c.beta.setConstant(b);
  c.gamma.setConstant(g);
  c.theta.setConstant(t);
  return FittedModel(ModelForm::kAggregate, s.groups(), {c});
}

}  // namespace

TEST_CASE("budget arithmetic") {
  const Toy toy;
  const auto r = toy.check("11", {Budget{1}});
  CHECK_FALSE(r.feasible);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].margin == -1.0);
  CHECK(r.total_violation == 1.0);
  CHECK(toy.check("01", {Budget{1}}).feasible);
  CHECK(toy.check("00", {Budget{0}}).feasible);
}

TEST_CASE("budget above m is rejected") {
  const Toy toy;
  CHECK_THROWS_AS(toy.check("00", {Budget{3}}), UsageError);
}

TEST_CASE("null intervention satisfies no-harm with zero margins") {
  const Toy toy;
  const auto r = toy.check("00", {Budget{0}, NoHarmAcross{0.0}});
  CHECK(r.feasible);
  int items = 0;
  for (const auto& m : r.margins) {
    if (m.constraint == 1) {
      CHECK(m.margin == 0.0);
      ++items;
    }
  }
  CHECK(items == 2);
}

TEST_CASE("toy no-harm at z = (0,1)") {
  const Toy toy;
  const auto r = toy.check("01", {Budget{1}, NoHarmAcross{0.0}});
  CHECK(r.feasible);
  // Group A rises 11/140 -> 0.15, group B 0.16 -> 0.23 under the stated
  // coefficients.
  for (const auto& m : r.margins) {
    if (m.item == "A") CHECK(std::fabs(m.margin - (0.15 - 13.75 / 175.0)) < 1e-12);
    if (m.item == "B") CHECK(std::fabs(m.margin - (0.23 - 0.16)) < 1e-12);
  }
}

TEST_CASE("margins flip exactly at the reported slack") {
  const Toy toy;
  const auto base = toy.check("01", {Budget{1}, NoHarmAcross{0.0}});
  double smallest = 1e9;
  for (const auto& m : base.margins) {
    if (m.constraint == 1) smallest = std::min(smallest, m.margin);
  }
  CHECK(toy.check("01", {Budget{1}, NoHarmAcross{smallest - 1e-9}}).feasible);
  CHECK_FALSE(toy.check("01", {Budget{1}, NoHarmAcross{smallest + 1e-9}}).feasible);

  const auto rate = toy.check("01", {Budget{1}, MinRateAcross{0.0}});
  double low = 1e9;
  for (const auto& m : rate.margins) {
    if (m.constraint == 1) low = std::min(low, m.margin);
  }
  CHECK(toy.check("01", {Budget{1}, MinRateAcross{low - 1e-9}}).feasible);
  CHECK_FALSE(toy.check("01", {Budget{1}, MinRateAcross{low + 1e-9}}).feasible);
}

TEST_CASE("within-set constraints") {
  const Toy toy;
  // E at z = (1,0): [[0.20, 0.30], [0.10, 0.15]]; at z = 0 the null rates.
  CHECK(toy.check("10", {Budget{1}, MinRateWithin{0.10 - 1e-9}}).feasible);
  CHECK_FALSE(toy.check("10", {Budget{1}, MinRateWithin{0.10 + 1e-9}}).feasible);
  CHECK(toy.check("10", {Budget{1}, NoHarmWithin{0.05 - 1e-9, {}}}).feasible);
  CHECK_FALSE(toy.check("10", {Budget{1}, NoHarmWithin{0.05 + 1e-9, {}}}).feasible);
  // Restricted to university-1 the gain is 0.10.
  CHECK(toy.check("10", {Budget{1}, NoHarmWithin{0.10 - 1e-9, {{0, 0}, {0, 1}}}}).feasible);
  CHECK_FALSE(toy.check("10", {Budget{1}, NoHarmWithin{0.05 + 1e-9, {{1, 1}}}}).feasible);
  CHECK_THROWS_AS(toy.check("10", {Budget{1}, NoHarmWithin{0.0, {{5, 0}}}}), UsageError);
}

TEST_CASE("no-harm and budget are monotone under removal") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const GroundTruth truth = gen_random(trial, 8, 2, 3);
    const auto n = build_neighbor_structure(truth.scenario);
    const InterventionVector z = testing::random_z(rng, 8);
    std::vector<ConstraintSpec> c = {Budget{4}};
    if (check_feasibility(truth.model, truth.scenario, n, z, c).feasible) {
      for (std::size_t j = 0; j < 8; ++j) {
        InterventionVector less = z;
        less.set(j, false);
        CHECK(check_feasibility(truth.model, truth.scenario, n, less, c).feasible);
      }
    }
    const std::vector<ConstraintSpec> noharm = {Budget{trial % 9 == 0 ? 0u : 3u}, NoHarmAcross{0.0}};
    CHECK(check_feasibility(truth.model, truth.scenario, n, InterventionVector(8), noharm).feasible);
  }
}

TEST_CASE("counterfactual privilege constraint") {
  const GroundTruth truth = gen_random(61, 10, 3, 3, 0.01);
  const auto n = build_neighbor_structure(truth.scenario);
  const InterventionVector z = InterventionVector::from_string("1000000001");

  SUBCASE("needs the aggregate model") {
    const std::vector<ConstraintSpec> c = {Budget{2}, CounterfactualPrivilege{0.1}};
    CHECK_THROWS_AS(check_feasibility(truth.model, truth.scenario, n, z, c), UsageError);
  }
  SUBCASE("category-constant coefficients are feasible for every positive tau") {
    const FittedModel agg = constant_aggregate(truth.scenario, 0.2, -0.07, 0.013, 0.31);
    for (double tau : {1.0, 1e-3, 1e-12, 1e-200, 5e-324}) {
      const std::vector<ConstraintSpec> c = {Budget{2}, CounterfactualPrivilege{tau}};
      CHECK(check_feasibility(truth.model, truth.scenario, n, z, c, &agg).feasible);
    }
    const std::vector<ConstraintSpec> zero = {Budget{2}, CounterfactualPrivilege{0.0}};
    CHECK_FALSE(check_feasibility(truth.model, truth.scenario, n, z, zero, &agg).feasible);
  }
  SUBCASE("margins track the largest one-hot privilege") {
    const FittedModel agg = fit_aggregate(truth.scenario, n);
    double worst = -1e9;
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        Eigen::VectorXd onehot = Eigen::VectorXd::Zero(3);
        onehot(static_cast<Eigen::Index>(k)) = 1.0;
        worst = std::max(worst, counterfactual_privilege(agg, truth.scenario, n, z, i, onehot));
      }
    }
    const std::vector<ConstraintSpec> above = {Budget{2}, CounterfactualPrivilege{worst + 1e-9}};
    const std::vector<ConstraintSpec> at = {Budget{2}, CounterfactualPrivilege{worst}};
    CHECK(check_feasibility(truth.model, truth.scenario, n, z, above, &agg).feasible);
    CHECK_FALSE(check_feasibility(truth.model, truth.scenario, n, z, at, &agg).feasible);
  }
}

TEST_CASE("constraint descriptions") {
  CHECK(describe(Budget{3}) == "budget(b=3)");
  CHECK(describe(NoHarmAcross{0.0}) == "no_harm_across(eta=0)");
  CHECK(describe(NoHarmWithin{0.5, {}}) == "no_harm_within(eta=0.5, cells=all)");
  CHECK(describe(MinRateWithin{0.25}) == "min_rate_within(kappa=0.25)");
  CHECK(describe(CounterfactualPrivilege{0.1}) == "counterfactual_privilege(tau=0.1)");
}
