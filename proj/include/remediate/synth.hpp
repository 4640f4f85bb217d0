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

#ifndef REMEDIATE_SYNTH_HPP_
#define REMEDIATE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "remediate/scenario.hpp"
#include "remediate/scm.hpp"

namespace remediate {

struct GroundTruth {
  Scenario scenario;
  FittedModel model;  // the generating coefficients
  double noise_sd = 0.0;
  std::vector<std::string> warnings;
};

// Two universities 1 km apart (similarity 0.5), groups A and B, no existing
// treatments. The model is expressed on the scenario's own proportions.
GroundTruth gen_toy_career_fair();

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct RandomRanges {
  Range latitude{40.55, 40.90};
  Range longitude{-74.05, -73.75};
  std::int64_t count_lo = 1;
  std::int64_t count_hi = 200;
  double p_calc = 0.3;
  double p_ap = 0.4;
  Range counselors{0.0, 5.0};
  Range alpha{0.0, 0.3};
  Range beta{-0.1, 0.1};
  Range gamma{-0.02, 0.02};
  Range theta{0.2, 0.5};
};

// Seeded random instance. Outcomes are the model's predictions at z = 0 plus
// N(0, noise_sd) noise, truncated to [0, 1]; truncations are reported in
// warnings. Pure function of its arguments.
GroundTruth gen_random(std::uint64_t seed, std::size_t m, std::size_t r, int neighbor_k = 5,
                       double noise_sd = 0.0, const RandomRanges& ranges = {});

}  // namespace remediate

#endif  // REMEDIATE_SYNTH_HPP_
