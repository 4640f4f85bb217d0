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

#include "remediate/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"
#include "remediate/objective.hpp"

namespace remediate {
namespace {

const std::vector<std::string> kSetsHeader = {"id",        "lat",       "lon",
                                              "counselors", "offers_ap", "offers_calc"};
const std::vector<std::string> kSlicesHeader = {"set_id", "group", "count", "outcome_rate"};
const std::vector<std::string> kWeightsHeader = {"set_id", "group", "weight"};

constexpr double kPi = 3.14159265358979323846;

void check_set(const InterventionSet& s, const std::string& where) {
  if (s.id.empty()) throw DataError(where + ": empty set id");
  if (!(s.latitude >= -90.0 && s.latitude <= 90.0)) {
    throw DataError(where + ": latitude " + csv::format_double(s.latitude) +
                    " outside [-90, 90]");
  }
  if (!(s.longitude >= -180.0 && s.longitude <= 180.0)) {
    throw DataError(where + ": longitude " + csv::format_double(s.longitude) +
                    " outside [-180, 180]");
  }
  if (!(s.counselors >= 0.0) || !std::isfinite(s.counselors)) {
    throw DataError(where + ": counselors must be a finite non-negative number");
  }
}

void check_slice(const GroupSlice& s, const std::string& where) {
  if (s.group.empty()) throw DataError(where + ": empty group label");
  if (s.count < 0) throw DataError(where + ": negative count " + std::to_string(s.count));
  if (!(s.outcome_rate >= 0.0 && s.outcome_rate <= 1.0)) {
    throw DataError(where + ": outcome_rate " + csv::format_double(s.outcome_rate) +
                    " outside [0, 1]");
  }
}

}  // namespace

ScenarioOptions ScenarioOptions::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open config");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  ScenarioOptions options;
  if (doc.contains("neighbor_k")) {
    if (!doc["neighbor_k"].is_number_integer() || doc["neighbor_k"].get<int>() < 0) {
      throw DataError(path.string() + ": neighbor_k must be a non-negative integer");
    }
    options.neighbor_k = doc["neighbor_k"].get<int>();
  }
  if (doc.contains("weights_path") && !doc["weights_path"].is_null()) {
    std::filesystem::path w = doc["weights_path"].get<std::string>();
    if (w.is_relative()) w = path.parent_path() / w;
    options.weights_path = w;
  }
  return options;
}

Scenario::Scenario(std::vector<InterventionSet> sets, std::vector<GroupSlice> slices,
                   int neighbor_k, std::vector<CellWeight> weights)
    : neighbor_k_(neighbor_k) {
  auto where = [](const char* what, std::size_t i) {
    return std::string(what) + " #" + std::to_string(i + 1);
  };
  if (neighbor_k < 0) throw DataError("neighbor_k must be non-negative");
  if (sets.empty()) throw DataError("scenario needs at least one intervention set (m >= 1)");
  for (std::size_t i = 0; i < sets.size(); ++i) check_set(sets[i], where("set", i));
  for (std::size_t i = 0; i < slices.size(); ++i) check_slice(slices[i], where("slice", i));

  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sets[a].id < sets[b].id; });
  sets_.reserve(sets.size());
  for (std::size_t i : order) sets_.push_back(std::move(sets[i]));
  for (std::size_t i = 1; i < sets_.size(); ++i) {
    if (sets_[i].id == sets_[i - 1].id) throw DataError("duplicate set id '" + sets_[i].id + "'");
  }

  std::set<std::string> labels;
  for (const auto& s : slices) labels.insert(s.group);
  groups_.assign(labels.begin(), labels.end());
  if (groups_.size() < 2) {
    throw DataError("scenario needs at least two groups (r >= 2), found " +
                    std::to_string(groups_.size()));
  }

  const auto m = static_cast<Eigen::Index>(sets_.size());
  const auto r = static_cast<Eigen::Index>(groups_.size());
  counts_ = CountMatrix::Constant(m, r, -1);
  rates_ = Eigen::MatrixXd::Zero(m, r);
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const auto& slice = slices[s];
    auto i = find_set(slice.set_id);
    if (!i) {
      throw DataError(where("slice", s) + ": unknown set_id '" + slice.set_id + "'");
    }
    auto k = *find_group(slice.group);
    if (counts_(*i, k) >= 0) {
      throw DataError(where("slice", s) + ": duplicate slice for (" + slice.set_id + ", " +
                      slice.group + ")");
    }
    counts_(*i, k) = slice.count;
    rates_(*i, k) = slice.outcome_rate;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < r; ++k) {
      if (counts_(i, k) < 0) {
        throw DataError("missing slice for (" + sets_[i].id + ", " + groups_[k] + ")");
      }
    }
  }

  proportions_ = Eigen::MatrixXd::Zero(m, r);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::int64_t n = counts_.row(i).sum();
    if (n > 0) {
      for (Eigen::Index k = 0; k < r; ++k) {
        proportions_(i, k) = static_cast<double>(counts_(i, k)) / static_cast<double>(n);
      }
    }
  }

  if (!weights.empty()) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(m, r, -1.0);
    for (std::size_t s = 0; s < weights.size(); ++s) {
      const auto& cell = weights[s];
      auto i = find_set(cell.set_id);
      auto k = find_group(cell.group);
      if (!i || !k) {
        throw DataError(where("weight", s) + ": unknown cell (" + cell.set_id + ", " +
                        cell.group + ")");
      }
      if (!(cell.weight >= 0.0) || !std::isfinite(cell.weight)) {
        throw DataError(where("weight", s) + ": weight must be finite and non-negative");
      }
      if (w(*i, *k) >= 0.0) {
        throw DataError(where("weight", s) + ": duplicate weight for (" + cell.set_id + ", " +
                        cell.group + ")");
      }
      w(*i, *k) = cell.weight;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index k = 0; k < r; ++k) {
        if (w(i, k) < 0.0) {
          throw DataError("missing weight for (" + sets_[i].id + ", " + groups_[k] + ")");
        }
      }
    }
    weights_ = std::move(w);
  }
}

GroupSlice Scenario::slice(std::size_t i, std::size_t k) const {
  return GroupSlice{sets_.at(i).id, groups_.at(k), counts_(i, k), rates_(i, k)};
}

std::optional<std::size_t> Scenario::find_set(std::string_view id) const {
  auto it = std::lower_bound(sets_.begin(), sets_.end(), id,
                             [](const InterventionSet& s, std::string_view v) { return s.id < v; });
  if (it == sets_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - sets_.begin());
}

std::optional<std::size_t> Scenario::find_group(std::string_view label) const {
  auto it = std::lower_bound(groups_.begin(), groups_.end(), label);
  if (it == groups_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - groups_.begin());
}

bool operator==(const Scenario& a, const Scenario& b) {
  if (a.sets_ != b.sets_ || a.groups_ != b.groups_ || a.neighbor_k_ != b.neighbor_k_) return false;
  if (a.counts_ != b.counts_ || a.rates_ != b.rates_) return false;
  if (a.weights_.has_value() != b.weights_.has_value()) return false;
  return !a.weights_ || *a.weights_ == *b.weights_;
}

Scenario load_scenario(const std::filesystem::path& sets_path,
                       const std::filesystem::path& slices_path, const ScenarioOptions& options) {
  const csv::Table sets_table = csv::read_file(sets_path);
  csv::expect_header(sets_table, kSetsHeader);
  std::vector<InterventionSet> sets;
  std::map<std::string, std::size_t> set_rows;
  for (std::size_t row = 0; row < sets_table.rows.size(); ++row) {
    InterventionSet s;
    s.id = sets_table.rows[row][0];
    s.latitude = csv::parse_double(sets_table, row, 1);
    s.longitude = csv::parse_double(sets_table, row, 2);
    s.counselors = csv::parse_double(sets_table, row, 3);
    s.offers_ap = csv::parse_binary(sets_table, row, 4);
    s.offers_calc = csv::parse_binary(sets_table, row, 5);
    const std::string where = sets_table.location(row, sets_table.header.size());
    check_set(s, where);
    if (!set_rows.emplace(s.id, row).second) {
      throw DataError(sets_table.location(row, 0) + ": duplicate id '" + s.id + "'");
    }
    sets.push_back(std::move(s));
  }
  if (sets.empty()) throw DataError(sets_path.string() + ": no intervention sets (m >= 1)");

  const csv::Table slices_table = csv::read_file(slices_path);
  csv::expect_header(slices_table, kSlicesHeader);
  std::vector<GroupSlice> slices;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t row = 0; row < slices_table.rows.size(); ++row) {
    GroupSlice s;
    s.set_id = slices_table.rows[row][0];
    s.group = slices_table.rows[row][1];
    s.count = csv::parse_int(slices_table, row, 2);
    s.outcome_rate = csv::parse_double(slices_table, row, 3);
    if (s.count < 0) {
      throw DataError(slices_table.location(row, 2) + ": negative count " +
                      std::to_string(s.count));
    }
    if (!(s.outcome_rate >= 0.0 && s.outcome_rate <= 1.0)) {
      throw DataError(slices_table.location(row, 3) + ": outcome_rate " +
                      csv::format_double(s.outcome_rate) + " outside [0, 1]");
    }
    if (s.group.empty()) throw DataError(slices_table.location(row, 1) + ": empty group label");
    if (!set_rows.count(s.set_id)) {
      throw DataError(slices_table.location(row, 0) + ": unknown set_id '" + s.set_id + "'");
    }
    if (!seen.emplace(s.set_id, s.group).second) {
      throw DataError(slices_table.location(row, 1) + ": duplicate slice for (" + s.set_id + ", " +
                      s.group + ")");
    }
    slices.push_back(std::move(s));
  }
  std::set<std::string> groups;
  for (const auto& s : slices) groups.insert(s.group);
  if (groups.size() < 2) {
    throw DataError(slices_path.string() + ": at least two groups required (r >= 2), found " +
                    std::to_string(groups.size()));
  }
  for (const auto& s : sets) {
    for (const auto& g : groups) {
      if (!seen.count({s.id, g})) {
        throw DataError(slices_path.string() + ": missing slice row for set '" + s.id +
                        "' group '" + g + "' (set defined at " +
                        sets_table.location(set_rows[s.id], sets_table.header.size()) + ")");
      }
    }
  }

  std::vector<CellWeight> weights;
  if (options.weights_path) {
    const csv::Table wt = csv::read_file(*options.weights_path);
    csv::expect_header(wt, kWeightsHeader);
    std::set<std::pair<std::string, std::string>> wseen;
    for (std::size_t row = 0; row < wt.rows.size(); ++row) {
      CellWeight w{wt.rows[row][0], wt.rows[row][1], csv::parse_double(wt, row, 2)};
      if (w.weight < 0.0) throw DataError(wt.location(row, 2) + ": negative weight");
      if (!seen.count({w.set_id, w.group})) {
        throw DataError(wt.location(row, 0) + ": unknown cell (" + w.set_id + ", " + w.group +
                        ")");
      }
      if (!wseen.emplace(w.set_id, w.group).second) {
        throw DataError(wt.location(row, 1) + ": duplicate weight row");
      }
      weights.push_back(std::move(w));
    }
    if (wseen.size() != seen.size()) {
      throw DataError(options.weights_path->string() + ": weights must cover every slice (" +
                      std::to_string(wseen.size()) + " of " + std::to_string(seen.size()) + ")");
    }
  }

  return Scenario(std::move(sets), std::move(slices), options.neighbor_k, std::move(weights));
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  {
    std::ofstream out(directory / "sets.csv", std::ios::binary);
    if (!out) throw DataError((directory / "sets.csv").string() + ": cannot write");
    csv::write_row(out, kSetsHeader);
    for (const auto& s : scenario.sets()) {
      csv::write_row(out, {s.id, csv::format_double(s.latitude), csv::format_double(s.longitude),
                           csv::format_double(s.counselors), s.offers_ap ? "1" : "0",
                           s.offers_calc ? "1" : "0"});
    }
  }
  {
    std::ofstream out(directory / "slices.csv", std::ios::binary);
    if (!out) throw DataError((directory / "slices.csv").string() + ": cannot write");
    csv::write_row(out, kSlicesHeader);
    for (std::size_t i = 0; i < scenario.num_sets(); ++i) {
      for (std::size_t k = 0; k < scenario.num_groups(); ++k) {
        csv::write_row(out, {scenario.set(i).id, scenario.groups()[k],
                             std::to_string(scenario.count(i, k)),
                             csv::format_double(scenario.rate(i, k))});
      }
    }
  }
  if (scenario.has_weights()) {
    std::ofstream out(directory / "weights.csv", std::ios::binary);
    if (!out) throw DataError((directory / "weights.csv").string() + ": cannot write");
    csv::write_row(out, kWeightsHeader);
    for (std::size_t i = 0; i < scenario.num_sets(); ++i) {
      for (std::size_t k = 0; k < scenario.num_groups(); ++k) {
        csv::write_row(out, {scenario.set(i).id, scenario.groups()[k],
                             csv::format_double(scenario.weight(i, k))});
      }
    }
  }
}

std::optional<double> NeighborStructure::similarity(std::size_t i, std::size_t j) const {
  for (const auto& n : neighbors_.at(i)) {
    if (n.index == j) return n.similarity;
  }
  return std::nullopt;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double to_rad = kPi / 180.0;
  const double dphi = (lat2 - lat1) * to_rad;
  const double dlambda = (lon2 - lon1) * to_rad;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(lat1 * to_rad) * std::cos(lat2 * to_rad) * std::sin(dlambda / 2) *
                       std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

double distance_similarity(double distance_km) { return 1.0 / (1.0 + distance_km); }

NeighborStructure build_neighbor_structure(const Scenario& scenario) {
  const std::size_t m = scenario.num_sets();
  const std::size_t keep =
      std::min(static_cast<std::size_t>(scenario.neighbor_k()), m == 0 ? 0 : m - 1);
  std::vector<std::vector<Neighbor>> all(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = scenario.set(i);
    dist.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      const auto& b = scenario.set(j);
      dist.emplace_back(haversine_km(a.latitude, a.longitude, b.latitude, b.longitude), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    auto& row = all[i];
    row.reserve(keep + 1);
    row.push_back({i, 1.0});
    for (std::size_t n = 0; n < keep; ++n) {
      row.push_back({dist[n].second, distance_similarity(dist[n].first)});
    }
  }
  return NeighborStructure(std::move(all));
}

GroupTotals group_totals(const Scenario& scenario) {
  const std::size_t m = scenario.num_sets();
  const std::size_t r = scenario.num_groups();
  GroupTotals totals;
  totals.per_group.assign(r, 0.0);
  totals.per_set.assign(m, 0.0);
  if (!scenario.has_weights()) {
    std::vector<std::int64_t> g(r, 0);
    std::int64_t n = 0;
    for (std::size_t i = 0; i < m; ++i) {
      std::int64_t row = 0;
      for (std::size_t k = 0; k < r; ++k) {
        g[k] += scenario.count(i, k);
        row += scenario.count(i, k);
      }
      totals.per_set[i] = static_cast<double>(row);
      n += row;
    }
    for (std::size_t k = 0; k < r; ++k) totals.per_group[k] = static_cast<double>(g[k]);
    totals.total = static_cast<double>(n);
    return totals;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      const double w = scenario.weight(i, k);
      totals.per_group[k] += w;
      totals.per_set[i] += w;
    }
  }
  for (double g : totals.per_group) totals.total += g;
  return totals;
}

double observed_disparity(const Scenario& scenario, const ObjectiveSpec& measure) {
  if (!measure.is_disparity()) {
    throw UsageError("observed_disparity needs a disparity measure, not " + measure.name());
  }
  return disparity(scenario.rates(), scenario, measure);
}

}  // namespace remediate
