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

#ifndef REMEDIATE_SCM_HPP_
#define REMEDIATE_SCM_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "remediate/scenario.hpp"

namespace remediate {

// Binary intervention decision per set, in scenario order.
class InterventionVector {
 public:
  InterventionVector() = default;
  explicit InterventionVector(std::size_t m) : bits_(m, 0) {}
  explicit InterventionVector(std::vector<std::uint8_t> bits);
  // "0110" -> (0, 1, 1, 0).
  static InterventionVector from_string(std::string_view bits);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_.at(i) = value ? 1 : 0; }
  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string to_string() const;

  // Lexicographic with index 0 most significant.
  friend auto operator<=>(const InterventionVector&, const InterventionVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct FeatureBundle {
  Eigen::VectorXd max_calc;     // max_{j in N(i)} s(i,j) (c_j or z_j)
  Eigen::VectorXd max_ap;       // max_{j in N(i)} s(i,j) p_j
  Eigen::VectorXd counselors;   // f_i
  Eigen::MatrixXd proportions;  // rho^(i), one row per set
};

// Spillover term from an explicit treated indicator t_j per set; the max of
// an all-zero argument set is 0.
Eigen::VectorXd max_calc(const NeighborStructure& neighbors, const std::vector<std::uint8_t>& treated);

FeatureBundle build_features(const Scenario& scenario, const NeighborStructure& neighbors,
                             const InterventionVector& z);

enum class ModelForm {
  kDisaggregated,  // one outcome per social category
  kAggregate,      // a single pooled outcome, proportions as causal regressors
};

// Coefficients dotted with a set's proportion vector. Each has length r.
struct CoefficientBlock {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  Eigen::VectorXd theta;

  static CoefficientBlock zeros(std::size_t r);
  friend bool operator==(const CoefficientBlock& a, const CoefficientBlock& b);
};

struct FitDiagnostics {
  double rss = 0.0;
  int rank = 0;
  double condition = 0.0;
  std::size_t observations = 0;
};

class FittedModel {
 public:
  // outcomes has one block per group for the disaggregated form and exactly
  // one block for the aggregate form.
  FittedModel(ModelForm form, std::vector<std::string> groups,
              std::vector<CoefficientBlock> outcomes, std::vector<FitDiagnostics> diagnostics = {});

  ModelForm form() const { return form_; }
  const std::vector<std::string>& groups() const { return groups_; }
  std::size_t num_categories() const { return groups_.size(); }
  std::size_t num_outcomes() const { return outcomes_.size(); }
  const CoefficientBlock& outcome(std::size_t k) const { return outcomes_.at(k); }
  const std::vector<FitDiagnostics>& diagnostics() const { return diagnostics_; }

  // Plain-text coefficient file, 17 significant digits, exact round trip.
  std::string to_text() const;
  static FittedModel from_text(std::string_view text, const std::string& source = "model");
  void save(const std::filesystem::path& path) const;
  static FittedModel load(const std::filesystem::path& path);

  friend bool operator==(const FittedModel& a, const FittedModel& b);

 private:
  ModelForm form_;
  std::vector<std::string> groups_;
  std::vector<CoefficientBlock> outcomes_;
  std::vector<FitDiagnostics> diagnostics_;
};

struct FitOptions {
  // Weight each (i, k) observation by n_k^(i) (or by the override weight).
  bool weight_by_count = false;
};

// Column layout of the design matrix: block b in {alpha, beta, gamma, theta},
// category k, column b * r + k holds rho_k^(i) times the block's feature.
Eigen::MatrixXd design_matrix(const FeatureBundle& features);

// Per-group least squares under the null intervention (observed c, z = 0);
// minimum-norm for rank-deficient designs.
FittedModel fit(const Scenario& scenario, const NeighborStructure& neighbors,
                const FitOptions& options = {});

// One regression of the pooled per-set rate sum_k w_k^(i) y_k^(i) / w^(i).
FittedModel fit_aggregate(const Scenario& scenario, const NeighborStructure& neighbors,
                          const FitOptions& options = {});

struct Prediction {
  Eigen::MatrixXd expected;  // m x r; the aggregate form repeats its value across columns
  std::vector<std::string> warnings;
};

// Expected outcomes under z. Values are not clamped; leaving [0, 1] only adds
// a warning.
Prediction predict(const FittedModel& model, const Scenario& scenario,
                   const NeighborStructure& neighbors, const InterventionVector& z);

// slope * max_calc_i + offset.
struct LinearTerm {
  double slope = 0.0;
  double offset = 0.0;
};

// A fitted model specialized to one scenario: every expected outcome is
// affine in its set's spillover term, E_ik = slope_ik * max_calc_i + offset_ik.
// predict() and the solvers both evaluate through this, so they agree bit for
// bit.
class ResponseSurface {
 public:
  ResponseSurface(const FittedModel& model, const Scenario& scenario,
                  const NeighborStructure& neighbors);

  std::size_t num_sets() const { return static_cast<std::size_t>(slopes_.rows()); }
  std::size_t num_groups() const { return groups_; }
  const NeighborStructure& neighbors() const { return neighbors_; }
  const std::vector<std::uint8_t>& offers_calc() const { return calc_; }
  const Eigen::MatrixXd& slopes() const { return slopes_; }
  const Eigen::MatrixXd& offsets() const { return offsets_; }

  // Treated indicator c_j or z_j.
  std::vector<std::uint8_t> treated(const InterventionVector& z) const;
  Eigen::VectorXd spillover(const InterventionVector& z) const;
  // m x r expected outcomes for a spillover vector.
  Eigen::MatrixXd expected(const Eigen::VectorXd& spill) const;
  void expected(const Eigen::VectorXd& spill, Eigen::MatrixXd& out) const;
  // Elementwise range of expected() over spillover vectors within
  // [spill_lower, spill_upper]; uses the same arithmetic, so the range
  // collapses to expected(spill) when both ends equal spill.
  void expected_bounds(const Eigen::VectorXd& spill_lower, const Eigen::VectorXd& spill_upper,
                       Eigen::MatrixXd& lower, Eigen::MatrixXd& upper) const;

  // Counterfactual privilege of set i against proportions rho_prime as a
  // function of its spillover term. Aggregate form only.
  LinearTerm privilege(std::size_t i, const Eigen::VectorXd& rho_prime) const;

 private:
  ModelForm form_;
  std::size_t groups_ = 0;
  NeighborStructure neighbors_;
  std::vector<std::uint8_t> calc_;
  Eigen::MatrixXd slopes_;
  Eigen::MatrixXd offsets_;
  // Aggregate form only.
  CoefficientBlock aggregate_;
  Eigen::VectorXd max_ap_;
  Eigen::VectorXd counselors_;
  Eigen::MatrixXd proportions_;
};

// c_ir' = E[Y^(i)(rho^(i), z)] - E[Y^(i)(rho', z)] under the aggregate form.
// Exactly zero when rho' equals rho^(i) or the coefficients do not vary across
// categories.
double counterfactual_privilege(const FittedModel& model, const Scenario& scenario,
                                const NeighborStructure& neighbors, const InterventionVector& z,
                                std::size_t i, const Eigen::VectorXd& rho_prime);

// Throws DataError unless v is non-negative, of length r, and sums to 1
// within 1e-9.
void check_simplex(const Eigen::VectorXd& v, std::size_t r);

}  // namespace remediate

#endif  // REMEDIATE_SCM_HPP_
