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
#include <numeric>
#include <sstream>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"
#include "remediate/objective.hpp"
#include "remediate/scenario.hpp"
#include "support.hpp"

using namespace remediate;
using testing::TempDir;
using testing::write_text;

namespace {

const char* kToySets =
    "id,lat,lon,counselors,offers_ap,offers_calc\n"
    "university-1,0,0,0,0,0\n"
    "university-2,0.008993203637245381,0,0,0,0\n";
const char* kToySlices =
    "set_id,group,count,outcome_rate\n"
    "university-1,A,100,0.10\n"
    "university-1,B,150,0.20\n"
    "university-2,A,75,0.05\n"
    "university-2,B,100,0.10\n";

Scenario load_text(const TempDir& dir, const std::string& sets, const std::string& slices,
                   const ScenarioOptions& options = {}) {
  write_text(dir / "sets.csv", sets);
  write_text(dir / "slices.csv", slices);
  return load_scenario(dir / "sets.csv", dir / "slices.csv", options);
}

std::string error_of(const TempDir& dir, const std::string& sets, const std::string& slices) {
  try {
    load_text(dir, sets, slices);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("csv parsing handles quotes, CRLF and blank lines") {
  const auto t = csv::parse("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\r\n\r\n1,2\n", "mem");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x, y");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.lines[1] == 4);
  CHECK_THROWS_AS(csv::parse("a,b\n1\n", "mem"), DataError);
  CHECK_THROWS_AS(csv::parse("a\n\"open\n", "mem"), DataError);
}

TEST_CASE("csv number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.125}) {
    const auto t = csv::parse("x\n" + csv::format_double(v) + "\n", "mem");
    CHECK(csv::parse_double(t, 0, 0) == v);
  }
  CHECK(csv::format_double(0.1) == "0.1");
  std::ostringstream out;
  csv::write_row(out, {"plain", "with,comma", "q\"uote"});
  CHECK(out.str() == "plain,\"with,comma\",\"q\"\"uote\"\n");
}

TEST_CASE("toy files load with the published counts") {
  TempDir dir;
  const Scenario s = load_text(dir, kToySets, kToySlices);
  CHECK(s.num_sets() == 2);
  CHECK(s.num_groups() == 2);
  const GroupTotals t = group_totals(s);
  CHECK(t.per_group[0] == 175);
  CHECK(t.per_group[1] == 250);
  CHECK(t.total == 425);
  CHECK(t.per_set[0] == 250);
  CHECK(t.per_set[1] == 175);
  CHECK(s.proportions()(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("observed disparity of the toy") {
  TempDir dir;
  const Scenario s = load_text(dir, kToySets, kToySlices);
  const double expected = std::fabs(13.75 / 175.0 - 40.0 / 250.0);
  CHECK(std::fabs(observed_disparity(s, ObjectiveSpec::across_population_pairwise()) - expected) < 1e-12);
  CHECK(std::fabs(expected - 0.081428571428571) < 1e-12);
  CHECK_THROWS_AS(observed_disparity(s, ObjectiveSpec::aggregate_impact()), UsageError);
}

TEST_CASE("rate outside [0,1] names the row") {
  TempDir dir;
  const std::string slices =
      "set_id,group,count,outcome_rate\n"
      "university-1,A,100,0.10\n"
      "university-1,B,150,1.2\n"
      "university-2,A,75,0.05\n"
      "university-2,B,100,0.10\n";
  const std::string msg = error_of(dir, kToySets, slices);
  CHECK(msg.find("slices.csv:3") != std::string::npos);
  CHECK(msg.find("outcome_rate") != std::string::npos);
}

TEST_CASE("load errors carry locations") {
  TempDir dir;
  const std::string sets_dup =
      "id,lat,lon,counselors,offers_ap,offers_calc\n"
      "u,0,0,0,0,0\n"
      "u,1,0,0,0,0\n";
  CHECK(error_of(dir, sets_dup, kToySlices).find("sets.csv:3") != std::string::npos);

  const std::string missing =
      "set_id,group,count,outcome_rate\n"
      "university-1,A,100,0.10\n"
      "university-1,B,150,0.20\n"
      "university-2,A,75,0.05\n";
  CHECK(error_of(dir, kToySets, missing).find("missing slice") != std::string::npos);

  const std::string negative =
      "set_id,group,count,outcome_rate\n"
      "university-1,A,-1,0.10\n"
      "university-1,B,150,0.20\n"
      "university-2,A,75,0.05\n"
      "university-2,B,100,0.10\n";
  CHECK(error_of(dir, kToySets, negative).find("slices.csv:2 column 'count'") != std::string::npos);

  const std::string one_group =
      "set_id,group,count,outcome_rate\n"
      "university-1,A,100,0.10\n"
      "university-2,A,75,0.05\n";
  CHECK(error_of(dir, kToySets, one_group).find("r >= 2") != std::string::npos);

  CHECK(error_of(dir, "id,lat,lon,counselors,offers_ap,offers_calc\n", kToySlices).find("m >= 1") !=
        std::string::npos);
  CHECK(error_of(dir, "id,lat,lon\nu,0,0\n", kToySlices).find("header") != std::string::npos);

  const std::string bad_binary =
      "id,lat,lon,counselors,offers_ap,offers_calc\n"
      "university-1,0,0,0,yes,0\n"
      "university-2,0,0,0,0,0\n";
  CHECK(error_of(dir, bad_binary, kToySlices).find("column 'offers_ap'") != std::string::npos);
}

TEST_CASE("490 sets by 7 groups load") {
  std::ostringstream sets;
  std::ostringstream slices;
  sets << "id,lat,lon,counselors,offers_ap,offers_calc\n";
  slices << "set_id,group,count,outcome_rate\n";
  for (int i = 0; i < 490; ++i) {
    sets << "school" << i << "," << 40.5 + 0.001 * i << "," << -74.0 + 0.0005 * (i % 37) << ",1,0,0\n";
    for (int k = 0; k < 7; ++k) slices << "school" << i << ",g" << k << "," << 10 + k << ",0.5\n";
  }
  TempDir dir;
  const Scenario s = load_text(dir, sets.str(), slices.str());
  CHECK(s.num_sets() == 490);
  CHECK(s.num_groups() == 7);
  CHECK(observed_disparity(s, ObjectiveSpec::across_population_pairwise()) == 0.0);
}

TEST_CASE("sets and groups are ordered deterministically") {
  const std::vector<InterventionSet> sets = {{"b", 0, 0, 0, false, false}, {"a", 0, 1, 0, false, false}};
  const std::vector<GroupSlice> slices = {
      {"b", "Z", 1, 0.1}, {"b", "Y", 2, 0.2}, {"a", "Z", 3, 0.3}, {"a", "Y", 4, 0.4}};
  const Scenario s(sets, slices, 5);
  CHECK(s.set(0).id == "a");
  CHECK(s.groups() == std::vector<std::string>{"Y", "Z"});
  CHECK(s.count(0, 0) == 4);
  CHECK(s.rate(1, 1) == 0.1);
  std::vector<InterventionSet> rev(sets.rbegin(), sets.rend());
  std::vector<GroupSlice> rslices(slices.rbegin(), slices.rend());
  CHECK(Scenario(rev, rslices, 5) == s);
}

TEST_CASE("haversine and similarity oracle values") {
  CHECK(std::fabs(haversine_km(0, 0, 1, 0) - 111.1950802335329) < 1e-9);
  const double s = distance_similarity(haversine_km(0, 0, 1, 0));
  CHECK(std::fabs(s - 0.008913046792412914) < 1e-15);
  CHECK(distance_similarity(0.0) == 1.0);
}

TEST_CASE("neighbor structure examples") {
  SUBCASE("identical coordinates") {
    const Scenario s({{"a", 3, 4, 0, false, false}, {"b", 3, 4, 0, false, false}},
                     {{"a", "A", 1, 0}, {"a", "B", 1, 0}, {"b", "A", 1, 0}, {"b", "B", 1, 0}}, 5);
    const auto n = build_neighbor_structure(s);
    CHECK(*n.similarity(0, 1) == 1.0);
    CHECK(*n.similarity(0, 0) == 1.0);
  }
  SUBCASE("singleton") {
    const Scenario s({{"a", 3, 4, 0, false, false}}, {{"a", "A", 1, 0}, {"a", "B", 1, 0}}, 5);
    const auto n = build_neighbor_structure(s);
    REQUIRE(n.of(0).size() == 1);
    CHECK(n.of(0)[0].index == 0);
    CHECK(n.of(0)[0].similarity == 1.0);
  }
  SUBCASE("one degree apart") {
    const Scenario s({{"a", 0, 0, 0, false, false}, {"b", 1, 0, 0, false, false}},
                     {{"a", "A", 1, 0}, {"a", "B", 1, 0}, {"b", "A", 1, 0}, {"b", "B", 1, 0}}, 5);
    const auto n = build_neighbor_structure(s);
    CHECK(std::fabs(*n.similarity(0, 1) - 0.008913046792412914) < 1e-15);
  }
  SUBCASE("ties broken by index and K limits the list") {
    // Sets 1 and 2 are equidistant from set 0.
    const Scenario s({{"a", 0, 0, 0, false, false}, {"b", 0, 1, 0, false, false},
                      {"c", 0, -1, 0, false, false}, {"d", 0, 5, 0, false, false}},
                     {{"a", "A", 1, 0}, {"a", "B", 1, 0}, {"b", "A", 1, 0}, {"b", "B", 1, 0},
                      {"c", "A", 1, 0}, {"c", "B", 1, 0}, {"d", "A", 1, 0}, {"d", "B", 1, 0}},
                     1);
    const auto n = build_neighbor_structure(s);
    REQUIRE(n.of(0).size() == 2);
    CHECK(n.of(0)[1].index == 1);
    CHECK_FALSE(n.similarity(0, 2).has_value());
  }
}

TEST_CASE("neighbor invariants on random layouts") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(40.5, 40.9);
  std::uniform_real_distribution<double> lon(-74.1, -73.7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<InterventionSet> sets;
    std::vector<GroupSlice> slices;
    for (int i = 0; i < 12; ++i) {
      const std::string id = "x" + std::to_string(100 + i);
      sets.push_back({id, lat(rng), lon(rng), 0, false, false});
      slices.push_back({id, "A", 1, 0.1});
      slices.push_back({id, "B", 1, 0.2});
    }
    const Scenario s(sets, slices, trial % 6);
    const auto n = build_neighbor_structure(s);
    for (std::size_t i = 0; i < s.num_sets(); ++i) {
      CHECK(n.of(i)[0].index == i);
      CHECK(n.of(i)[0].similarity == 1.0);
      CHECK(n.of(i).size() == std::min<std::size_t>(trial % 6, 11) + 1);
      for (const auto& nb : n.of(i)) {
        CHECK(nb.similarity > 0.0);
        CHECK(nb.similarity <= 1.0);
        const auto back = n.similarity(nb.index, i);
        if (back) CHECK(*back == nb.similarity);
      }
    }
  }
}

TEST_CASE("group totals") {
  const Scenario s = testing::line_scenario({{10, 0}, {20, 0}, {30, 0}}, {{0.1, 0}, {0.1, 0}, {0.1, 0}});
  const GroupTotals t = group_totals(s);
  CHECK(t.per_group[0] == 60);
  CHECK(t.per_group[1] == 0);
  CHECK_THROWS_AS(observed_disparity(s, ObjectiveSpec::across_population_pairwise()), DataError);
}

TEST_CASE("observed disparity over three groups sums unordered pairs") {
  const Scenario s = testing::line_scenario({{5, 5, 5}}, {{0.1, 0.2, 0.4}});
  CHECK(std::fabs(observed_disparity(s, ObjectiveSpec::across_population_pairwise()) - 0.6) < 1e-12);
  CHECK(std::fabs(observed_disparity(s, ObjectiveSpec::across_population_pairwise(true)) - 1.2) < 1e-12);
}

TEST_CASE("observed disparity is invariant under relabeling and set order") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(0, 50);
  std::uniform_real_distribution<double> rate(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<InterventionSet> sets;
    std::vector<GroupSlice> slices;
    std::vector<GroupSlice> relabeled;
    const std::vector<std::string> labels = {"A", "B", "C"};
    const std::vector<std::string> permuted = {"C", "A", "B"};
    for (int i = 0; i < 6; ++i) {
      const std::string id = "s" + std::to_string(i);
      sets.push_back({id, 0, 0.1 * i, 0, false, false});
      for (int k = 0; k < 3; ++k) {
        const int n = count(rng) + 1;
        const double y = rate(rng);
        slices.push_back({id, labels[k], n, y});
        relabeled.push_back({id, permuted[k], n, y});
      }
    }
    const Scenario a(sets, slices, 3);
    std::vector<InterventionSet> shuffled = sets;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const Scenario b(shuffled, relabeled, 3);
    for (const auto& spec : {ObjectiveSpec::across_population_pairwise(), ObjectiveSpec::within_set_pairwise(),
                             ObjectiveSpec::threshold_across(0.5), ObjectiveSpec::threshold_within(0.5)}) {
      CHECK(observed_disparity(a, spec) == doctest::Approx(observed_disparity(b, spec)).epsilon(1e-12));
    }
  }
}

TEST_CASE("write then reload is identical") {
  TempDir dir;
  const Scenario s = load_text(dir, kToySets, kToySlices);
  TempDir out;
  write_scenario(s, out.path());
  CHECK(load_scenario(out / "sets.csv", out / "slices.csv") == s);
}

TEST_CASE("weights replace counts in totals and round-trip") {
  TempDir dir;
  write_text(dir / "weights.csv",
             "set_id,group,weight\nuniversity-1,A,1\nuniversity-1,B,1\nuniversity-2,A,3\nuniversity-2,B,1\n");
  write_text(dir / "options.json", "{\"neighbor_k\": 1, \"weights_path\": \"weights.csv\"}");
  const ScenarioOptions options = ScenarioOptions::from_file(dir / "options.json");
  CHECK(options.neighbor_k == 1);
  const Scenario s = load_text(dir, kToySets, kToySlices, options);
  CHECK(s.has_weights());
  const GroupTotals t = group_totals(s);
  CHECK(t.per_group[0] == 4);
  CHECK(t.total == 6);
  TempDir out;
  write_scenario(s, out.path());
  ScenarioOptions reload;
  reload.neighbor_k = 1;
  reload.weights_path = out / "weights.csv";
  CHECK(load_scenario(out / "sets.csv", out / "slices.csv", reload) == s);

  write_text(dir / "short.csv", "set_id,group,weight\nuniversity-1,A,1\n");
  ScenarioOptions incomplete;
  incomplete.weights_path = dir / "short.csv";
  CHECK_THROWS_AS(load_text(dir, kToySets, kToySlices, incomplete), DataError);
}

TEST_CASE("set with no individuals gets a zero proportion row") {
  const Scenario s = testing::line_scenario({{0, 0}, {1, 3}}, {{0, 0}, {0.1, 0.2}});
  CHECK(s.proportions().row(0).isZero());
  CHECK(s.proportions()(1, 1) == 0.75);
}
