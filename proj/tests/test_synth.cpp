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

#include "remediate/error.hpp"
#include "remediate/objective.hpp"
#include "remediate/synth.hpp"
#include "support.hpp"

using namespace remediate;

TEST_CASE("toy career fair structure") {
  const GroundTruth toy = gen_toy_career_fair();
  const Scenario& s = toy.scenario;
  REQUIRE(s.num_sets() == 2);
  REQUIRE(s.num_groups() == 2);
  CHECK(s.set(0).id == "university-1");
  CHECK(s.set(1).id == "university-2");
  CHECK(s.groups() == std::vector<std::string>{"A", "B"});
  CHECK(s.count(0, 0) == 100);
  CHECK(s.count(0, 1) == 150);
  CHECK(s.count(1, 0) == 75);
  CHECK(s.count(1, 1) == 100);
  CHECK(!s.set(0).offers_calc);
  CHECK(!s.set(1).offers_calc);
  CHECK(toy.noise_sd == 0.0);
  CHECK(toy.warnings.empty());

  const auto n = build_neighbor_structure(s);
  REQUIRE(n.of(0).size() == 2);
  CHECK(std::fabs(n.of(0)[1].similarity - 0.5) < 1e-12);

  const double expect[2][2] = {{0.10, 0.20}, {0.05, 0.10}};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t k = 0; k < 2; ++k) CHECK(std::fabs(s.rate(i, k) - expect[i][k]) < 1e-12);
  }
  const auto pred = predict(toy.model, s, n, InterventionVector(2));
  CHECK(pred.expected == s.rates());
}

TEST_CASE("gen_random is a pure function of its arguments") {
  const GroundTruth a = gen_random(7, 30, 3, 4, 0.02);
  const GroundTruth b = gen_random(7, 30, 3, 4, 0.02);
  CHECK(a.scenario == b.scenario);
  CHECK(a.model == b.model);
  CHECK(a.warnings == b.warnings);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.scenario.rate(i, k) == b.scenario.rate(i, k));
  }
  const GroundTruth c = gen_random(8, 30, 3, 4, 0.02);
  CHECK(!(a.scenario == c.scenario));
}

TEST_CASE("gen_random shape and labels") {
  const GroundTruth t = gen_random(1, 120, 5, 2);
  CHECK(t.scenario.num_sets() == 120);
  CHECK(t.scenario.groups() == std::vector<std::string>{"A", "B", "C", "D", "E"});
  CHECK(t.scenario.neighbor_k() == 2);
  CHECK(t.scenario.set(0).id == "s000");
  CHECK(t.scenario.set(119).id == "s119");
  const RandomRanges ranges;
  for (const auto& set : t.scenario.sets()) {
    CHECK(set.latitude >= ranges.latitude.lo);
    CHECK(set.latitude <= ranges.latitude.hi);
    CHECK(set.longitude >= ranges.longitude.lo);
    CHECK(set.longitude <= ranges.longitude.hi);
    CHECK(set.counselors >= 0.0);
    CHECK(set.counselors <= 5.0);
  }
  for (std::size_t i = 0; i < 120; ++i) {
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(t.scenario.count(i, k) >= 1);
      CHECK(t.scenario.count(i, k) <= 200);
    }
  }
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& block = t.model.outcome(k);
    CHECK(block.alpha.minCoeff() >= 0.0);
    CHECK(block.alpha.maxCoeff() <= 0.3);
    CHECK(block.theta.minCoeff() >= 0.2);
    CHECK(block.theta.maxCoeff() <= 0.5);
  }
}

TEST_CASE("zero noise makes outcomes the model's null predictions") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GroundTruth t = gen_random(seed, 25, 2 + seed % 3, 3, 0.0);
    const auto n = build_neighbor_structure(t.scenario);
    const auto pred = predict(t.model, t.scenario, n, InterventionVector(25));
    CHECK(pred.expected == t.scenario.rates());
    const auto spec = ObjectiveSpec::across_population_pairwise();
    CHECK(observed_disparity(t.scenario, spec) == disparity(pred.expected, t.scenario, spec));
  }
}

TEST_CASE("fit on generated data recovers the generator") {
  const GroundTruth t = gen_random(11, 60, 3, 5, 0.0);
  const auto n = build_neighbor_structure(t.scenario);
  const FittedModel m = fit(t.scenario, n);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK((m.outcome(k).theta - t.model.outcome(k).theta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((m.outcome(k).alpha - t.model.outcome(k).alpha).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("large noise is truncated and reported") {
  const GroundTruth t = gen_random(5, 40, 2, 3, 2.0);
  REQUIRE(t.warnings.size() == 1);
  CHECK(t.warnings[0].find("truncated") != std::string::npos);
  CHECK(t.scenario.rates().minCoeff() >= 0.0);
  CHECK(t.scenario.rates().maxCoeff() <= 1.0);
  CHECK(t.noise_sd == 2.0);
}

TEST_CASE("invalid generator arguments") {
  CHECK_THROWS_AS(gen_random(1, 0, 2), UsageError);
  CHECK_THROWS_AS(gen_random(1, 5, 1), UsageError);
  CHECK_THROWS_AS(gen_random(1, 5, 2, -1), UsageError);
  CHECK_THROWS_AS(gen_random(1, 5, 2, 1, -0.5), UsageError);
  CHECK_THROWS_AS(gen_random(1, 5, 2, 1, std::nan("")), UsageError);
  RandomRanges bad;
  bad.alpha = {0.5, 0.1};
  CHECK_THROWS_AS(gen_random(1, 5, 2, 1, 0.0, bad), UsageError);
  RandomRanges counts;
  counts.count_lo = 300;
  CHECK_THROWS_AS(gen_random(1, 5, 2, 1, 0.0, counts), UsageError);
  RandomRanges probs;
  probs.p_ap = 1.5;
  CHECK_THROWS_AS(gen_random(1, 5, 2, 1, 0.0, probs), UsageError);
}

TEST_CASE("a single set instance is valid") {
  const GroundTruth t = gen_random(2, 1, 2);
  CHECK(t.scenario.num_sets() == 1);
  CHECK(t.scenario.set(0).id == "s000");
}

TEST_CASE("generated scenarios survive a write and reload") {
  const GroundTruth t = gen_random(21, 12, 3, 2, 0.05);
  testing::TempDir dir;
  write_scenario(t.scenario, dir.path());
  ScenarioOptions opts;
  opts.neighbor_k = 2;
  const Scenario back = load_scenario(dir / "sets.csv", dir / "slices.csv", opts);
  CHECK(back == t.scenario);
  const FittedModel reparsed = FittedModel::from_text(t.model.to_text());
  CHECK(reparsed == t.model);
}
