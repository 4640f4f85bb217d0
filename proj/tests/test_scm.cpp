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

#include "remediate/error.hpp"
#include "remediate/scm.hpp"
#include "remediate/synth.hpp"
#include "support.hpp"

using namespace remediate;

namespace {

Eigen::VectorXd v2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Every prediction recomputed from the structural equation, no shared code
// with ResponseSurface beyond the feature bundle.
Eigen::MatrixXd direct_predict(const FittedModel& model, const Scenario& s, const NeighborStructure& n,
                               const InterventionVector& z) {
  const FeatureBundle f = build_features(s, n, z);
  Eigen::MatrixXd e(s.num_sets(), s.num_groups());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
      const auto& b = model.outcome(static_cast<std::size_t>(k));
      const Eigen::VectorXd rho = f.proportions.row(i).transpose();
      e(i, k) = b.alpha.dot(rho) * f.max_calc(i) + b.beta.dot(rho) * f.max_ap(i) +
                b.gamma.dot(rho) * f.counselors(i) + b.theta.dot(rho);
    }
  }
  return e;
}

}  // namespace

TEST_CASE("intervention vectors") {
  const auto z = InterventionVector::from_string("0110");
  CHECK(z.size() == 4);
  CHECK(z.count() == 2);
  CHECK(z.to_string() == "0110");
  CHECK(InterventionVector::from_string("0011") < z);
  CHECK_THROWS(InterventionVector::from_string("01x"));
}

TEST_CASE("max calc examples") {
  SUBCASE("toy geometry") {
    const GroundTruth toy = gen_toy_career_fair();
    const auto n = build_neighbor_structure(toy.scenario);
    const auto a = build_features(toy.scenario, n, InterventionVector::from_string("10")).max_calc;
    const auto b = build_features(toy.scenario, n, InterventionVector::from_string("01")).max_calc;
    CHECK(a(0) == 1.0);
    CHECK(std::fabs(a(1) - 0.5) < 1e-12);
    CHECK(std::fabs(b(0) - 0.5) < 1e-12);
    CHECK(b(1) == 1.0);
    CHECK(build_features(toy.scenario, n, InterventionVector(2)).max_calc.isZero());
  }
  SUBCASE("all c = 1 saturates") {
    const Scenario s = testing::line_scenario({{1, 1}, {1, 1}, {1, 1}}, {{0, 0}, {0, 0}, {0, 0}}, 2,
                                              {true, true, true});
    const auto n = build_neighbor_structure(s);
    for (const char* z : {"000", "101", "111"}) {
      CHECK(build_features(s, n, InterventionVector::from_string(z)).max_calc.isOnes());
    }
  }
  SUBCASE("singleton") {
    const Scenario s = testing::line_scenario({{1, 1}}, {{0, 0}});
    const auto n = build_neighbor_structure(s);
    CHECK(build_features(s, n, InterventionVector::from_string("1")).max_calc(0) == 1.0);
    CHECK(build_features(s, n, InterventionVector::from_string("0")).max_calc(0) == 0.0);
  }
}

TEST_CASE("toy predictions under the stated coefficients") {
  const GroundTruth toy = gen_toy_career_fair();
  const auto n = build_neighbor_structure(toy.scenario);
  const Eigen::MatrixXd a = predict(toy.model, toy.scenario, n, InterventionVector::from_string("10")).expected;
  const Eigen::MatrixXd b = predict(toy.model, toy.scenario, n, InterventionVector::from_string("01")).expected;
  const Eigen::MatrixXd stated_a = testing::stated_toy_expectations("10");
  CHECK((a - stated_a).cwiseAbs().maxCoeff() < 1e-12);
  // alpha * rho = 0.1 and theta * rho = 0.10 for set 2, group B, so the
  // structural form gives 0.1 * 1 + 0.10 there.
  CHECK(std::fabs(b(0, 0) - 0.15) < 1e-12);
  CHECK(std::fabs(b(0, 1) - 0.25) < 1e-12);
  CHECK(std::fabs(b(1, 0) - 0.15) < 1e-12);
  CHECK(std::fabs(b(1, 1) - 0.20) < 1e-12);
}

TEST_CASE("fit recovers an intercept-only structure") {
  // Single populated group: set group B counts to zero so rho = (1, 0).
  const Scenario s = testing::line_scenario({{5, 0}, {7, 0}, {9, 0}}, {{0.3, 0.0}, {0.3, 0.0}, {0.3, 0.0}});
  const auto n = build_neighbor_structure(s);
  const FittedModel m = fit(s, n);
  CHECK(std::fabs(m.outcome(0).theta(0) - 0.3) < 1e-12);
  CHECK(std::fabs(m.outcome(0).theta(1)) < 1e-12);
  CHECK(m.outcome(0).alpha.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.outcome(0).beta.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.outcome(0).gamma.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.diagnostics()[0].rank == 1);
}

TEST_CASE("fit recovers generating coefficients at zero noise") {
  const GroundTruth truth = gen_random(3, 60, 3, 5, 0.0);
  const auto n = build_neighbor_structure(truth.scenario);
  const FittedModel m = fit(truth.scenario, n);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(m.diagnostics()[k].rank == 12);
    const auto& a = m.outcome(k);
    const auto& b = truth.model.outcome(k);
    CHECK((a.alpha - b.alpha).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((a.gamma - b.gamma).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("duplicated rows do not change the fit") {
  const GroundTruth truth = gen_random(4, 20, 2, 3, 0.01);
  std::vector<InterventionSet> sets;
  std::vector<GroupSlice> slices;
  for (int copy = 0; copy < 2; ++copy) {
    for (std::size_t i = 0; i < truth.scenario.num_sets(); ++i) {
      InterventionSet s = truth.scenario.set(i);
      s.id += copy == 0 ? "a" : "b";
      sets.push_back(s);
      for (std::size_t k = 0; k < 2; ++k) {
        slices.push_back({s.id, truth.scenario.groups()[k], truth.scenario.count(i, k), truth.scenario.rate(i, k)});
      }
    }
  }
  // K = 0 keeps every copy's features equal to its original.
  std::vector<InterventionSet> single(sets.begin(), sets.begin() + 20);
  std::vector<GroupSlice> single_slices(slices.begin(), slices.begin() + 40);
  const Scenario once(single, single_slices, 0);
  const Scenario twice(sets, slices, 0);
  const FittedModel a = fit(once, build_neighbor_structure(once));
  const FittedModel b = fit(twice, build_neighbor_structure(twice));
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK((a.outcome(k).theta - b.outcome(k).theta).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((a.outcome(k).gamma - b.outcome(k).gamma).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("least-squares residual is orthogonal to the design") {
  const GroundTruth truth = gen_random(9, 40, 3, 4, 0.02);
  const auto n = build_neighbor_structure(truth.scenario);
  const FittedModel m = fit(truth.scenario, n);
  const Eigen::MatrixXd x = design_matrix(build_features(truth.scenario, n, InterventionVector(40)));
  const Eigen::MatrixXd e = predict(m, truth.scenario, n, InterventionVector(40)).expected;
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Eigen::VectorXd resid = truth.scenario.rates().col(k) - e.col(k);
    const double scale = x.cwiseAbs().maxCoeff() * truth.scenario.rates().col(k).cwiseAbs().maxCoeff() * 40;
    CHECK((x.transpose() * resid).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }
}

TEST_CASE("predictions from a zero-noise fit match the truth at every z") {
  const GroundTruth truth = gen_random(21, 8, 3, 2, 0.0);
  const auto n = build_neighbor_structure(truth.scenario);
  const FittedModel m = fit(truth.scenario, n);
  // m = 8 observations for 12 coefficients: not identified, but predictions
  // at z = 0 must be reproduced.
  CHECK(m.diagnostics()[0].rank <= 8);
  const Eigen::MatrixXd fitted = predict(m, truth.scenario, n, InterventionVector(8)).expected;
  CHECK((fitted - truth.scenario.rates()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("weighted fit option") {
  const GroundTruth truth = gen_random(5, 30, 2, 3, 0.0);
  const auto n = build_neighbor_structure(truth.scenario);
  FitOptions opt;
  opt.weight_by_count = true;
  const FittedModel m = fit(truth.scenario, n, opt);
  const Eigen::MatrixXd e = predict(m, truth.scenario, n, InterventionVector(30)).expected;
  CHECK((e - truth.scenario.rates()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("null model predicts zero and predictions are not clamped") {
  const GroundTruth truth = gen_random(1, 5, 2);
  const auto n = build_neighbor_structure(truth.scenario);
  FittedModel zero(ModelForm::kDisaggregated, truth.scenario.groups(),
                   {CoefficientBlock::zeros(2), CoefficientBlock::zeros(2)});
  const Prediction p = predict(zero, truth.scenario, n, InterventionVector::from_string("10101"));
  CHECK(p.expected.isZero());
  CHECK(p.warnings.empty());

  CoefficientBlock big = CoefficientBlock::zeros(2);
  big.theta = v2(1.5, 1.5);
  FittedModel over(ModelForm::kDisaggregated, truth.scenario.groups(), {big, big});
  const Prediction q = predict(over, truth.scenario, n, InterventionVector(5));
  CHECK(std::fabs(q.expected(0, 0) - 1.5) < 1e-12);
  CHECK_FALSE(q.warnings.empty());
}

TEST_CASE("predict rejects mismatched groups") {
  const GroundTruth truth = gen_random(1, 5, 2);
  const GroundTruth other = gen_random(1, 5, 3);
  const auto n = build_neighbor_structure(truth.scenario);
  CHECK_THROWS_AS(predict(other.model, truth.scenario, n, InterventionVector(5)), UsageError);
}

TEST_CASE("response surface matches the structural equation") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const GroundTruth truth = gen_random(100 + trial, 9, 3, trial % 4);
    const auto n = build_neighbor_structure(truth.scenario);
    const InterventionVector z = testing::random_z(rng, 9);
    const Eigen::MatrixXd a = predict(truth.model, truth.scenario, n, z).expected;
    CHECK((a - direct_predict(truth.model, truth.scenario, n, z)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("interference properties") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const GroundTruth truth = gen_random(trial, 10, 2, trial % 5);
    const Scenario& s = truth.scenario;
    const auto n = build_neighbor_structure(s);
    const InterventionVector z = testing::random_z(rng, 10);
    const std::size_t j = trial % 10;
    InterventionVector up = z;
    up.set(j, true);
    const auto before = build_features(s, n, z).max_calc;
    const auto after = build_features(s, n, up).max_calc;
    CHECK((after.array() >= before.array()).all());
    if (s.set(j).offers_calc) {
      CHECK(predict(truth.model, s, n, up).expected == predict(truth.model, s, n, z).expected);
    }
  }
}

TEST_CASE("non-interference reduction at K = 0") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const GroundTruth truth = gen_random(500 + trial, 7, 2, 0);
    const auto n = build_neighbor_structure(truth.scenario);
    const InterventionVector z = testing::random_z(rng, 7);
    const std::size_t j = trial % 7;
    InterventionVector flipped = z;
    flipped.set(j, !z[j]);
    const auto a = predict(truth.model, truth.scenario, n, z).expected;
    const auto b = predict(truth.model, truth.scenario, n, flipped).expected;
    for (Eigen::Index i = 0; i < 7; ++i) {
      if (static_cast<std::size_t>(i) != j) CHECK(a.row(i) == b.row(i));
    }
  }
}

TEST_CASE("only c or z matters") {
  const GroundTruth truth = gen_random(12, 6, 2, 2);
  std::vector<InterventionSet> none;
  std::vector<InterventionSet> all;
  std::vector<GroupSlice> slices;
  for (std::size_t i = 0; i < 6; ++i) {
    InterventionSet s = truth.scenario.set(i);
    s.offers_calc = false;
    none.push_back(s);
    s.offers_calc = true;
    all.push_back(s);
    for (std::size_t k = 0; k < 2; ++k) {
      slices.push_back({s.id, truth.scenario.groups()[k], truth.scenario.count(i, k), truth.scenario.rate(i, k)});
    }
  }
  const Scenario a(none, slices, 2);
  const Scenario b(all, slices, 2);
  const auto na = build_neighbor_structure(a);
  const auto nb = build_neighbor_structure(b);
  CHECK(predict(truth.model, a, na, InterventionVector::from_string("111111")).expected ==
        predict(truth.model, b, nb, InterventionVector(6)).expected);
}

TEST_CASE("counterfactual privilege") {
  // One set with rho = (1, 0).
  const Scenario s = testing::line_scenario({{5, 0}}, {{0.3, 0.0}});
  const auto n = build_neighbor_structure(s);
  CoefficientBlock b = CoefficientBlock::zeros(2);
  b.theta = v2(0.3, 0.1);
  const FittedModel agg(ModelForm::kAggregate, s.groups(), {b});
  CHECK(std::fabs(counterfactual_privilege(agg, s, n, InterventionVector(1), 0, v2(0, 1)) - 0.2) < 1e-15);
  CHECK(counterfactual_privilege(agg, s, n, InterventionVector(1), 0, v2(1, 0)) == 0.0);

  SUBCASE("factual proportions give exactly zero") {
    const GroundTruth truth = gen_random(31, 12, 3, 3, 0.01);
    const auto nn = build_neighbor_structure(truth.scenario);
    const FittedModel a = fit_aggregate(truth.scenario, nn);
    std::mt19937_64 rng(3);
    for (std::size_t i = 0; i < 12; ++i) {
      const Eigen::VectorXd rho = truth.scenario.proportions().row(static_cast<Eigen::Index>(i)).transpose();
      CHECK(counterfactual_privilege(a, truth.scenario, nn, testing::random_z(rng, 12), i, rho) == 0.0);
    }
  }
  SUBCASE("category-constant coefficients give exactly zero") {
    const GroundTruth truth = gen_random(32, 12, 3, 3, 0.01);
    const auto nn = build_neighbor_structure(truth.scenario);
    CoefficientBlock c = CoefficientBlock::zeros(3);
    c.alpha.setConstant(0.137);
    c.beta.setConstant(-0.05);
    c.gamma.setConstant(0.011);
    c.theta.setConstant(0.3);
    const FittedModel constant(ModelForm::kAggregate, truth.scenario.groups(), {c});
    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(3);
    onehot(2) = 1.0;
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(counterfactual_privilege(constant, truth.scenario, nn, InterventionVector::from_string("110000000011"),
                                     i, onehot) == 0.0);
    }
  }
  CHECK_THROWS_AS(counterfactual_privilege(agg, s, n, InterventionVector(1), 0, v2(0.5, 0.6)), DataError);
  const FittedModel dis(ModelForm::kDisaggregated, s.groups(), {b, b});
  CHECK_THROWS_AS(counterfactual_privilege(dis, s, n, InterventionVector(1), 0, v2(0, 1)), UsageError);
}

TEST_CASE("aggregate fit reproduces pooled rates when identified") {
  const GroundTruth truth = gen_random(41, 40, 2, 3, 0.0);
  const auto n = build_neighbor_structure(truth.scenario);
  const FittedModel a = fit_aggregate(truth.scenario, n);
  CHECK(a.form() == ModelForm::kAggregate);
  CHECK(a.num_outcomes() == 1);
  const Eigen::MatrixXd e = predict(a, truth.scenario, n, InterventionVector(40)).expected;
  CHECK(e.col(0) == e.col(1));
}

TEST_CASE("model text round trip is exact") {
  const GroundTruth truth = gen_random(51, 30, 3, 3, 0.01);
  const auto n = build_neighbor_structure(truth.scenario);
  const FittedModel m = fit(truth.scenario, n);
  const FittedModel back = FittedModel::from_text(m.to_text());
  CHECK(back == m);
  CHECK(back.diagnostics().size() == 3);
  CHECK(back.to_text() == m.to_text());
  testing::TempDir dir;
  const FittedModel a = fit_aggregate(truth.scenario, n);
  a.save(dir / "agg.txt");
  CHECK(FittedModel::load(dir / "agg.txt") == a);

  CHECK_THROWS_AS(FittedModel::from_text("not a model\n"), DataError);
  std::string broken = m.to_text();
  broken.replace(broken.find("alpha"), 5, "omega");
  CHECK_THROWS_AS(FittedModel::from_text(broken), DataError);
}

TEST_CASE("check_simplex") {
  CHECK_NOTHROW(check_simplex(v2(0.25, 0.75), 2));
  CHECK_THROWS_AS(check_simplex(v2(-0.1, 1.1), 2), DataError);
  CHECK_THROWS_AS(check_simplex(v2(0.5, 0.4), 2), DataError);
  CHECK_THROWS_AS(check_simplex(v2(0.5, 0.5), 3), DataError);
}
