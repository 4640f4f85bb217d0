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

#include "remediate/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "remediate/error.hpp"

namespace remediate {
namespace {

// Uniform draws built directly on the engine so that sequences do not depend
// on the standard library's distribution implementations.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(const Range& range) { return range.lo + (range.hi - range.lo) * unit(); }
  bool bernoulli(double p) { return unit() < p; }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }
  // Box-Muller.
  double normal() {
    double u = unit();
    while (u <= 0.0) u = unit();
    const double v = unit();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  std::mt19937_64 engine_;
};

void check_range(const Range& range, const char* name) {
  if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || range.lo > range.hi) {
    throw UsageError(std::string("invalid ") + name + " range");
  }
}

std::string group_label(std::size_t k) {
  std::string label;
  std::size_t v = k;
  do {
    label.insert(label.begin(), static_cast<char>('A' + v % 26));
    v = v / 26;
  } while (v-- > 0);
  return label;
}

std::string set_label(std::size_t i, std::size_t m) {
  std::size_t width = 3;
  for (std::size_t n = 1000; n <= m; n *= 10) ++width;
  std::string digits = std::to_string(i);
  return "s" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double x : values) v(j++) = x;
  return v;
}

}  // namespace

GroundTruth gen_toy_career_fair() {
  const double one_km_deg = (1.0 / kEarthRadiusKm) * 180.0 / std::numbers::pi;
  std::vector<InterventionSet> sets = {
      {"university-1", 0.0, 0.0, 0.0, false, false},
      {"university-2", one_km_deg, 0.0, 0.0, false, false},
  };
  std::vector<GroupSlice> slices = {
      {"university-1", "A", 100, 0.0},
      {"university-1", "B", 150, 0.0},
      {"university-2", "A", 75, 0.0},
      {"university-2", "B", 100, 0.0},
  };
  Scenario shell(sets, slices, 1);

  // Per-set intercepts and slopes of the toy, mapped onto coefficient vectors
  // over the scenario's proportions by solving rho * theta = target.
  const Eigen::MatrixXd& rho = shell.proportions();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(rho);
  std::vector<CoefficientBlock> blocks;
  const Eigen::VectorXd intercept[2] = {vec({0.10, 0.05}), vec({0.20, 0.10})};
  for (std::size_t k = 0; k < 2; ++k) {
    CoefficientBlock b = CoefficientBlock::zeros(2);
    b.alpha = vec({0.10, 0.10});
    b.theta = lu.solve(intercept[k]);
    blocks.push_back(b);
  }
  FittedModel model(ModelForm::kDisaggregated, shell.groups(), blocks);

  const NeighborStructure neighbors = build_neighbor_structure(shell);
  const Prediction null = predict(model, shell, neighbors, InterventionVector(2));
  for (auto& s : slices) {
    const std::size_t i = *shell.find_set(s.set_id);
    const std::size_t k = *shell.find_group(s.group);
    s.outcome_rate = null.expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }
  return GroundTruth{Scenario(sets, slices, 1), model, 0.0, {}};
}

GroundTruth gen_random(std::uint64_t seed, std::size_t m, std::size_t r, int neighbor_k,
                       double noise_sd, const RandomRanges& ranges) {
  if (m < 1) throw UsageError("gen_random needs m >= 1");
  if (r < 2) throw UsageError("gen_random needs r >= 2");
  if (neighbor_k < 0) throw UsageError("neighbor_k must be non-negative");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw UsageError("noise_sd must be finite and non-negative");
  }
  check_range(ranges.latitude, "latitude");
  check_range(ranges.longitude, "longitude");
  check_range(ranges.counselors, "counselors");
  check_range(ranges.alpha, "alpha");
  check_range(ranges.beta, "beta");
  check_range(ranges.gamma, "gamma");
  check_range(ranges.theta, "theta");
  if (ranges.count_lo < 0 || ranges.count_lo > ranges.count_hi) {
    throw UsageError("invalid count range");
  }
  if (!(ranges.p_calc >= 0.0 && ranges.p_calc <= 1.0) || !(ranges.p_ap >= 0.0 && ranges.p_ap <= 1.0)) {
    throw UsageError("treatment probabilities must lie in [0, 1]");
  }

  Draw draw(seed);
  std::vector<InterventionSet> sets;
  std::vector<GroupSlice> slices;
  std::vector<std::string> groups;
  for (std::size_t k = 0; k < r; ++k) groups.push_back(group_label(k));
  for (std::size_t i = 0; i < m; ++i) {
    InterventionSet s;
    s.id = set_label(i, m);
    s.latitude = draw.uniform(ranges.latitude);
    s.longitude = draw.uniform(ranges.longitude);
    s.counselors = draw.uniform(ranges.counselors);
    s.offers_ap = draw.bernoulli(ranges.p_ap);
    s.offers_calc = draw.bernoulli(ranges.p_calc);
    sets.push_back(s);
    for (const auto& g : groups) {
      slices.push_back({s.id, g, draw.integer(ranges.count_lo, ranges.count_hi), 0.0});
    }
  }
  std::vector<CoefficientBlock> blocks;
  for (std::size_t k = 0; k < r; ++k) {
    CoefficientBlock b = CoefficientBlock::zeros(r);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(r); ++j) b.alpha(j) = draw.uniform(ranges.alpha);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(r); ++j) b.beta(j) = draw.uniform(ranges.beta);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(r); ++j) b.gamma(j) = draw.uniform(ranges.gamma);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(r); ++j) b.theta(j) = draw.uniform(ranges.theta);
    blocks.push_back(b);
  }

  const Scenario shell(sets, slices, neighbor_k);
  FittedModel model(ModelForm::kDisaggregated, shell.groups(), blocks);
  const NeighborStructure neighbors = build_neighbor_structure(shell);
  const Prediction null = predict(model, shell, neighbors, InterventionVector(m));

  std::size_t truncated = 0;
  for (auto& s : slices) {
    const std::size_t i = *shell.find_set(s.set_id);
    const std::size_t k = *shell.find_group(s.group);
    double y = null.expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    if (noise_sd > 0.0) y += noise_sd * draw.normal();
    if (y < 0.0 || y > 1.0) {
      ++truncated;
      y = std::clamp(y, 0.0, 1.0);
    }
    s.outcome_rate = y;
  }
  std::vector<std::string> warnings;
  if (truncated > 0) {
    warnings.push_back(std::to_string(truncated) + " outcome(s) truncated to [0, 1]");
  }
  return GroundTruth{Scenario(sets, slices, neighbor_k), model, noise_sd, std::move(warnings)};
}

}  // namespace remediate
