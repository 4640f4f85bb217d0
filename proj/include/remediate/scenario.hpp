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

#ifndef REMEDIATE_SCENARIO_HPP_
#define REMEDIATE_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace remediate {

class ObjectiveSpec;

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// One unit that a single binary intervention acts on (a school, a
// university, ...), with the covariates used by the structural equations.
struct InterventionSet {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
  double counselors = 0.0;
  bool offers_ap = false;
  bool offers_calc = false;

  friend bool operator==(const InterventionSet&, const InterventionSet&) = default;
};

// Measurement for one (intervention set, social category) cell.
struct GroupSlice {
  std::string set_id;
  std::string group;
  std::int64_t count = 0;
  double outcome_rate = 0.0;
};

// Optional override of the count used as a cell's weight in every mean.
struct CellWeight {
  std::string set_id;
  std::string group;
  double weight = 0.0;
};

struct ScenarioOptions {
  int neighbor_k = 5;
  std::optional<std::filesystem::path> weights_path;

  // Reads a JSON object with optional keys "neighbor_k" and "weights_path".
  // Relative weight paths resolve against the config file's directory.
  static ScenarioOptions from_file(const std::filesystem::path& path);
};

// Immutable, validated m x r table of disaggregated measurements.
//
// Sets are stored sorted by id and groups sorted by label, whatever order the
// constructor receives them in. Proportions are derived from counts; a set
// with no individuals gets an all-zero proportion row.
class Scenario {
 public:
  Scenario(std::vector<InterventionSet> sets, std::vector<GroupSlice> slices, int neighbor_k,
           std::vector<CellWeight> weights = {});

  std::size_t num_sets() const { return sets_.size(); }
  std::size_t num_groups() const { return groups_.size(); }
  int neighbor_k() const { return neighbor_k_; }

  const std::vector<InterventionSet>& sets() const { return sets_; }
  const InterventionSet& set(std::size_t i) const { return sets_.at(i); }
  const std::vector<std::string>& groups() const { return groups_; }

  std::int64_t count(std::size_t i, std::size_t k) const { return counts_(i, k); }
  double rate(std::size_t i, std::size_t k) const { return rates_(i, k); }
  const CountMatrix& counts() const { return counts_; }
  const Eigen::MatrixXd& rates() const { return rates_; }
  const Eigen::MatrixXd& proportions() const { return proportions_; }

  bool has_weights() const { return weights_.has_value(); }
  // Weight of cell (i, k) in every mean: the override weight when present,
  // otherwise the count.
  double weight(std::size_t i, std::size_t k) const {
    return weights_ ? (*weights_)(i, k) : static_cast<double>(counts_(i, k));
  }
  const std::optional<Eigen::MatrixXd>& weights() const { return weights_; }

  GroupSlice slice(std::size_t i, std::size_t k) const;

  std::optional<std::size_t> find_set(std::string_view id) const;
  std::optional<std::size_t> find_group(std::string_view label) const;

  friend bool operator==(const Scenario& a, const Scenario& b);

 private:
  std::vector<InterventionSet> sets_;
  std::vector<std::string> groups_;
  CountMatrix counts_;
  Eigen::MatrixXd rates_;
  Eigen::MatrixXd proportions_;
  std::optional<Eigen::MatrixXd> weights_;
  int neighbor_k_ = 5;
};

// Loads sets.csv and slices.csv (schemas in the README) plus the optional
// weights file named by the options. Errors carry file:line locations.
Scenario load_scenario(const std::filesystem::path& sets_path,
                       const std::filesystem::path& slices_path,
                       const ScenarioOptions& options = {});

// Writes sets.csv, slices.csv and, when the scenario has weights,
// weights.csv into a directory. Reloading gives an identical Scenario.
void write_scenario(const Scenario& scenario, const std::filesystem::path& directory);

struct Neighbor {
  std::size_t index = 0;
  double similarity = 0.0;
};

// N(i) for every set: i itself first, then the min(K, m-1) nearest other
// sets by great-circle distance (ties by ascending index).
class NeighborStructure {
 public:
  explicit NeighborStructure(std::vector<std::vector<Neighbor>> neighbors)
      : neighbors_(std::move(neighbors)) {}

  std::size_t size() const { return neighbors_.size(); }
  const std::vector<Neighbor>& of(std::size_t i) const { return neighbors_.at(i); }
  // s(i, j) if j is in N(i).
  std::optional<double> similarity(std::size_t i, std::size_t j) const;

 private:
  std::vector<std::vector<Neighbor>> neighbors_;
};

inline constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(double lat1, double lon1, double lat2, double lon2);

// s(i, j) = 1 / (1 + d_km(i, j)).
double distance_similarity(double distance_km);

NeighborStructure build_neighbor_structure(const Scenario& scenario);

struct GroupTotals {
  std::vector<double> per_group;  // n_k
  std::vector<double> per_set;    // n^(i)
  double total = 0.0;             // n
};

// Count totals, or weight totals when the scenario carries weights.
GroupTotals group_totals(const Scenario& scenario);

// Disparity of the factual outcome rates. Throws UsageError for the
// aggregate-impact objective and DataError for an empty referenced group.
double observed_disparity(const Scenario& scenario, const ObjectiveSpec& measure);

}  // namespace remediate

#endif  // REMEDIATE_SCENARIO_HPP_
