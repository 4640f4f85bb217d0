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

#include "remediate/scm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"

namespace remediate {
namespace {

constexpr const char* kModelMagic = "remediate-model v1";
constexpr const char* kBlockNames[4] = {"alpha", "beta", "gamma", "theta"};
constexpr const char* kAggregateLabel = "*";

double dot(const Eigen::VectorXd& coef, const Eigen::MatrixXd& rows, Eigen::Index i) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < coef.size(); ++c) acc += coef(c) * rows(i, c);
  return acc;
}

const Eigen::VectorXd& block(const CoefficientBlock& b, int which) {
  switch (which) {
    case 0:
      return b.alpha;
    case 1:
      return b.beta;
    case 2:
      return b.gamma;
    default:
      return b.theta;
  }
}

Eigen::VectorXd& block(CoefficientBlock& b, int which) {
  return const_cast<Eigen::VectorXd&>(block(std::as_const(b), which));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    out.emplace_back(line.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
  return v;
}

struct Solved {
  Eigen::VectorXd coefficients;
  FitDiagnostics diagnostics;
};

Solved least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() < 1) throw DataError("least squares needs at least one observation");
  if (!x.allFinite() || !y.allFinite()) throw DataError("non-finite value in regression data");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  Solved out;
  out.coefficients = cod.solve(y);
  const Eigen::VectorXd residual = y - x * out.coefficients;
  out.diagnostics.rss = residual.squaredNorm();
  out.diagnostics.rank = static_cast<int>(cod.rank());
  out.diagnostics.observations = static_cast<std::size_t>(x.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const Eigen::VectorXd& sv = svd.singularValues();
  double smallest = 0.0;
  for (Eigen::Index i = 0; i < sv.size() && i < cod.rank(); ++i) smallest = sv(i);
  out.diagnostics.condition = smallest > 0.0 ? sv(0) / smallest : 0.0;
  return out;
}

CoefficientBlock unpack(const Eigen::VectorXd& beta, std::size_t r) {
  CoefficientBlock b = CoefficientBlock::zeros(r);
  for (int which = 0; which < 4; ++which) {
    block(b, which) = beta.segment(static_cast<Eigen::Index>(which * r), static_cast<Eigen::Index>(r));
  }
  return b;
}

}  // namespace

InterventionVector::InterventionVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    if (b > 1) throw UsageError("intervention entries must be 0 or 1");
  }
}

InterventionVector InterventionVector::from_string(std::string_view bits) {
  std::vector<std::uint8_t> v;
  v.reserve(bits.size());
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw UsageError("intervention string must contain only 0/1");
    v.push_back(ch == '1' ? 1 : 0);
  }
  return InterventionVector(std::move(v));
}

std::size_t InterventionVector::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::string InterventionVector::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

Eigen::VectorXd max_calc(const NeighborStructure& neighbors,
                         const std::vector<std::uint8_t>& treated) {
  const std::size_t m = neighbors.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    double best = 0.0;
    for (const auto& n : neighbors.of(i)) {
      if (treated[n.index] && n.similarity > best) best = n.similarity;
    }
    out(static_cast<Eigen::Index>(i)) = best;
  }
  return out;
}

FeatureBundle build_features(const Scenario& scenario, const NeighborStructure& neighbors,
                             const InterventionVector& z) {
  const std::size_t m = scenario.num_sets();
  if (z.size() != m) {
    throw UsageError("intervention vector has length " + std::to_string(z.size()) +
                     ", scenario has " + std::to_string(m) + " sets");
  }
  if (neighbors.size() != m) throw UsageError("neighbor structure does not match scenario");
  std::vector<std::uint8_t> treated(m);
  std::vector<std::uint8_t> ap(m);
  FeatureBundle f;
  f.counselors.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    treated[i] = (scenario.set(i).offers_calc || z[i]) ? 1 : 0;
    ap[i] = scenario.set(i).offers_ap ? 1 : 0;
    f.counselors(static_cast<Eigen::Index>(i)) = scenario.set(i).counselors;
  }
  f.max_calc = max_calc(neighbors, treated);
  f.max_ap = max_calc(neighbors, ap);
  f.proportions = scenario.proportions();
  return f;
}

CoefficientBlock CoefficientBlock::zeros(std::size_t r) {
  const auto n = static_cast<Eigen::Index>(r);
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
          Eigen::VectorXd::Zero(n)};
}

bool operator==(const CoefficientBlock& a, const CoefficientBlock& b) {
  return a.alpha == b.alpha && a.beta == b.beta && a.gamma == b.gamma && a.theta == b.theta;
}

FittedModel::FittedModel(ModelForm form, std::vector<std::string> groups,
                         std::vector<CoefficientBlock> outcomes,
                         std::vector<FitDiagnostics> diagnostics)
    : form_(form),
      groups_(std::move(groups)),
      outcomes_(std::move(outcomes)),
      diagnostics_(std::move(diagnostics)) {
  const std::size_t r = groups_.size();
  const std::size_t expected = form_ == ModelForm::kAggregate ? 1 : r;
  if (r < 2) throw DataError("model needs at least two categories");
  if (outcomes_.size() != expected) {
    throw DataError("model has " + std::to_string(outcomes_.size()) + " outcome blocks, expected " +
                    std::to_string(expected));
  }
  for (const auto& b : outcomes_) {
    for (int which = 0; which < 4; ++which) {
      if (static_cast<std::size_t>(block(b, which).size()) != r) {
        throw DataError(std::string("coefficient vector ") + kBlockNames[which] +
                        " must have length " + std::to_string(r));
      }
    }
  }
  if (!diagnostics_.empty() && diagnostics_.size() != outcomes_.size()) {
    throw DataError("diagnostics must cover every outcome block");
  }
}

bool operator==(const FittedModel& a, const FittedModel& b) {
  return a.form_ == b.form_ && a.groups_ == b.groups_ && a.outcomes_ == b.outcomes_;
}

std::string FittedModel::to_text() const {
  std::ostringstream out;
  out << kModelMagic << '\n';
  out << "form " << (form_ == ModelForm::kAggregate ? "aggregate" : "disaggregated") << '\n';
  out << "groups";
  for (std::size_t k = 0; k < groups_.size(); ++k) out << (k ? ',' : ' ') << groups_[k];
  out << '\n';
  out << "outcome,block,category,value\n";
  for (std::size_t o = 0; o < outcomes_.size(); ++o) {
    const std::string label = form_ == ModelForm::kAggregate ? kAggregateLabel : groups_[o];
    for (int which = 0; which < 4; ++which) {
      const auto& v = block(outcomes_[o], which);
      for (std::size_t c = 0; c < groups_.size(); ++c) {
        out << label << ',' << kBlockNames[which] << ',' << groups_[c] << ','
            << csv::format_double(v(static_cast<Eigen::Index>(c)), 17) << '\n';
      }
    }
  }
  if (!diagnostics_.empty()) {
    out << "diagnostics\n";
    out << "outcome,rss,rank,condition,observations\n";
    for (std::size_t o = 0; o < diagnostics_.size(); ++o) {
      const auto& d = diagnostics_[o];
      const std::string label = form_ == ModelForm::kAggregate ? kAggregateLabel : groups_[o];
      out << label << ',' << csv::format_double(d.rss, 17) << ',' << d.rank << ','
          << csv::format_double(d.condition, 17) << ',' << d.observations << '\n';
    }
  }
  return out.str();
}

FittedModel FittedModel::from_text(std::string_view text, const std::string& source) {
  std::vector<std::string> lines;
  for (auto& l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (!l.empty()) lines.push_back(l);
  }
  auto where = [&](std::size_t i) { return source + ":" + std::to_string(i + 1); };
  if (lines.size() < 4 || lines[0] != kModelMagic) {
    throw DataError(source + ": not a model file (expected '" + kModelMagic + "')");
  }
  ModelForm form;
  if (lines[1] == "form disaggregated") {
    form = ModelForm::kDisaggregated;
  } else if (lines[1] == "form aggregate") {
    form = ModelForm::kAggregate;
  } else {
    throw DataError(where(1) + ": unknown model form line '" + lines[1] + "'");
  }
  if (lines[2].rfind("groups ", 0) != 0) throw DataError(where(2) + ": expected groups header");
  std::vector<std::string> groups = split(std::string_view(lines[2]).substr(7), ',');
  const std::size_t r = groups.size();
  if (r < 2) throw DataError(where(2) + ": at least two groups required");
  if (lines[3] != "outcome,block,category,value") {
    throw DataError(where(3) + ": expected coefficient table header");
  }
  const std::size_t outcomes = form == ModelForm::kAggregate ? 1 : r;
  std::vector<CoefficientBlock> blocks(outcomes, CoefficientBlock::zeros(r));
  std::size_t line = 4;
  for (std::size_t o = 0; o < outcomes; ++o) {
    const std::string label = form == ModelForm::kAggregate ? kAggregateLabel : groups[o];
    for (int which = 0; which < 4; ++which) {
      for (std::size_t c = 0; c < r; ++c, ++line) {
        if (line >= lines.size()) throw DataError(source + ": truncated coefficient table");
        auto f = split(lines[line], ',');
        if (f.size() != 4 || f[0] != label || f[1] != kBlockNames[which] || f[2] != groups[c]) {
          throw DataError(where(line) + ": expected row " + label + "," + kBlockNames[which] + "," +
                          groups[c]);
        }
        block(blocks[o], which)(static_cast<Eigen::Index>(c)) = parse_number(f[3], where(line));
      }
    }
  }
  std::vector<FitDiagnostics> diagnostics;
  if (line < lines.size()) {
    if (lines[line] != "diagnostics" || line + 1 >= lines.size()) {
      throw DataError(where(line) + ": unexpected content after coefficients");
    }
    line += 2;
    for (std::size_t o = 0; o < outcomes; ++o, ++line) {
      if (line >= lines.size()) throw DataError(source + ": truncated diagnostics");
      auto f = split(lines[line], ',');
      if (f.size() != 5) throw DataError(where(line) + ": malformed diagnostics row");
      FitDiagnostics d;
      d.rss = parse_number(f[1], where(line));
      d.rank = static_cast<int>(parse_number(f[2], where(line)));
      d.condition = parse_number(f[3], where(line));
      d.observations = static_cast<std::size_t>(parse_number(f[4], where(line)));
      diagnostics.push_back(d);
    }
  }
  return FittedModel(form, std::move(groups), std::move(blocks), std::move(diagnostics));
}

void FittedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write model");
  out << to_text();
}

FittedModel FittedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open model");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path.string());
}

Eigen::MatrixXd design_matrix(const FeatureBundle& features) {
  const Eigen::Index m = features.proportions.rows();
  const Eigen::Index r = features.proportions.cols();
  Eigen::MatrixXd x(m, 4 * r);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double feature[4] = {features.max_calc(i), features.max_ap(i), features.counselors(i),
                               1.0};
    for (int which = 0; which < 4; ++which) {
      for (Eigen::Index k = 0; k < r; ++k) {
        x(i, which * r + k) = features.proportions(i, k) * feature[which];
      }
    }
  }
  return x;
}

FittedModel fit(const Scenario& scenario, const NeighborStructure& neighbors,
                const FitOptions& options) {
  const std::size_t m = scenario.num_sets();
  const std::size_t r = scenario.num_groups();
  const FeatureBundle features = build_features(scenario, neighbors, InterventionVector(m));
  const Eigen::MatrixXd x = design_matrix(features);
  std::vector<CoefficientBlock> blocks;
  std::vector<FitDiagnostics> diagnostics;
  for (std::size_t k = 0; k < r; ++k) {
    Eigen::VectorXd y = scenario.rates().col(static_cast<Eigen::Index>(k));
    Solved solved;
    if (options.weight_by_count) {
      Eigen::VectorXd sw(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        sw(static_cast<Eigen::Index>(i)) = std::sqrt(scenario.weight(i, k));
      }
      solved = least_squares(sw.asDiagonal() * x, sw.asDiagonal() * y);
    } else {
      solved = least_squares(x, y);
    }
    blocks.push_back(unpack(solved.coefficients, r));
    diagnostics.push_back(solved.diagnostics);
  }
  return FittedModel(ModelForm::kDisaggregated, scenario.groups(), std::move(blocks),
                     std::move(diagnostics));
}

FittedModel fit_aggregate(const Scenario& scenario, const NeighborStructure& neighbors,
                          const FitOptions& options) {
  const std::size_t m = scenario.num_sets();
  const std::size_t r = scenario.num_groups();
  const FeatureBundle features = build_features(scenario, neighbors, InterventionVector(m));
  Eigen::MatrixXd x = design_matrix(features);
  Eigen::VectorXd y(static_cast<Eigen::Index>(m));
  Eigen::VectorXd set_weight(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    double w = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < r; ++k) {
      w += scenario.weight(i, k);
      acc += scenario.weight(i, k) * scenario.rate(i, k);
    }
    y(static_cast<Eigen::Index>(i)) = w > 0.0 ? acc / w : 0.0;
    set_weight(static_cast<Eigen::Index>(i)) = w;
  }
  Solved solved;
  if (options.weight_by_count) {
    const Eigen::VectorXd sw = set_weight.cwiseSqrt();
    solved = least_squares(sw.asDiagonal() * x, sw.asDiagonal() * y);
  } else {
    solved = least_squares(x, y);
  }
  return FittedModel(ModelForm::kAggregate, scenario.groups(), {unpack(solved.coefficients, r)},
                     {solved.diagnostics});
}

ResponseSurface::ResponseSurface(const FittedModel& model, const Scenario& scenario,
                                 const NeighborStructure& neighbors)
    : form_(model.form()), groups_(scenario.num_groups()), neighbors_(neighbors) {
  if (model.groups() != scenario.groups()) {
    throw UsageError("model groups do not match scenario groups");
  }
  const std::size_t m = scenario.num_sets();
  if (neighbors.size() != m) throw UsageError("neighbor structure does not match scenario");
  const FeatureBundle f = build_features(scenario, neighbors, InterventionVector(m));
  calc_.resize(m);
  for (std::size_t i = 0; i < m; ++i) calc_[i] = scenario.set(i).offers_calc ? 1 : 0;
  const auto outs = static_cast<Eigen::Index>(model.num_outcomes());
  slopes_.resize(static_cast<Eigen::Index>(m), outs);
  offsets_.resize(static_cast<Eigen::Index>(m), outs);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
    for (Eigen::Index o = 0; o < outs; ++o) {
      const auto& b = model.outcome(static_cast<std::size_t>(o));
      slopes_(i, o) = dot(b.alpha, f.proportions, i);
      offsets_(i, o) = dot(b.beta, f.proportions, i) * f.max_ap(i) +
                       dot(b.gamma, f.proportions, i) * f.counselors(i) +
                       dot(b.theta, f.proportions, i);
    }
  }
  if (form_ == ModelForm::kAggregate) {
    aggregate_ = model.outcome(0);
    max_ap_ = f.max_ap;
    counselors_ = f.counselors;
    proportions_ = f.proportions;
  }
}

std::vector<std::uint8_t> ResponseSurface::treated(const InterventionVector& z) const {
  if (z.size() != calc_.size()) {
    throw UsageError("intervention vector has length " + std::to_string(z.size()) +
                     ", scenario has " + std::to_string(calc_.size()) + " sets");
  }
  std::vector<std::uint8_t> t(calc_.size());
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = (calc_[j] || z[j]) ? 1 : 0;
  return t;
}

Eigen::VectorXd ResponseSurface::spillover(const InterventionVector& z) const {
  return max_calc(neighbors_, treated(z));
}

Eigen::MatrixXd ResponseSurface::expected(const Eigen::VectorXd& spill) const {
  Eigen::MatrixXd out;
  expected(spill, out);
  return out;
}

void ResponseSurface::expected(const Eigen::VectorXd& spill, Eigen::MatrixXd& out) const {
  const Eigen::Index m = slopes_.rows();
  const auto r = static_cast<Eigen::Index>(groups_);
  out.resize(m, r);
  if (form_ == ModelForm::kAggregate) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = slopes_(i, 0) * spill(i) + offsets_(i, 0);
      for (Eigen::Index k = 0; k < r; ++k) out(i, k) = v;
    }
    return;
  }
  for (Eigen::Index k = 0; k < r; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) out(i, k) = slopes_(i, k) * spill(i) + offsets_(i, k);
  }
}

void ResponseSurface::expected_bounds(const Eigen::VectorXd& spill_lower,
                                      const Eigen::VectorXd& spill_upper, Eigen::MatrixXd& lower,
                                      Eigen::MatrixXd& upper) const {
  const Eigen::Index m = slopes_.rows();
  const auto r = static_cast<Eigen::Index>(groups_);
  lower.resize(m, r);
  upper.resize(m, r);
  const bool pooled = form_ == ModelForm::kAggregate;
  for (Eigen::Index k = 0; k < r; ++k) {
    const Eigen::Index o = pooled ? 0 : k;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double slope = slopes_(i, o);
      const double a = slope * spill_lower(i) + offsets_(i, o);
      const double b = slope * spill_upper(i) + offsets_(i, o);
      if (slope >= 0.0) {
        lower(i, k) = a;
        upper(i, k) = b;
      } else {
        lower(i, k) = b;
        upper(i, k) = a;
      }
    }
  }
}

LinearTerm ResponseSurface::privilege(std::size_t i, const Eigen::VectorXd& rho_prime) const {
  if (form_ != ModelForm::kAggregate) {
    throw UsageError("counterfactual privilege needs the aggregate model form");
  }
  check_simplex(rho_prime, groups_);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto r = static_cast<Eigen::Index>(groups_);
  // sum_k d_k v_k with d = rho - rho' summing to zero, written relative to
  // category 0 so category-constant coefficients cancel exactly.
  // An empty set has an all-zero proportion row, so the differences no
  // longer sum to zero and the reference shift does not apply.
  const auto& b = aggregate_;
  const bool on_simplex = proportions_.row(ii).sum() > 0.0;
  const Eigen::Index ref = 0;
  LinearTerm term;
  for (Eigen::Index k = 0; k < r; ++k) {
    const double d = proportions_(ii, k) - rho_prime(k);
    const double a0 = on_simplex ? b.alpha(ref) : 0.0;
    const double b0 = on_simplex ? b.beta(ref) : 0.0;
    const double g0 = on_simplex ? b.gamma(ref) : 0.0;
    const double t0 = on_simplex ? b.theta(ref) : 0.0;
    term.slope += d * (b.alpha(k) - a0);
    term.offset += d * ((b.beta(k) - b0) * max_ap_(ii) + (b.gamma(k) - g0) * counselors_(ii) +
                        (b.theta(k) - t0));
  }
  return term;
}

void check_simplex(const Eigen::VectorXd& v, std::size_t r) {
  if (static_cast<std::size_t>(v.size()) != r) {
    throw DataError("proportion vector has length " + std::to_string(v.size()) + ", expected " +
                    std::to_string(r));
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!(v(k) >= 0.0) || !std::isfinite(v(k))) {
      throw DataError("proportion vector entries must be finite and non-negative");
    }
    sum += v(k);
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw DataError("proportion vector must sum to 1, sums to " + csv::format_double(sum));
  }
}

Prediction predict(const FittedModel& model, const Scenario& scenario,
                   const NeighborStructure& neighbors, const InterventionVector& z) {
  if (model.groups() != scenario.groups()) {
    throw UsageError("model groups do not match scenario groups");
  }
  const ResponseSurface surface(model, scenario, neighbors);
  Prediction p;
  p.expected = surface.expected(surface.spillover(z));
  const auto outside = (p.expected.array() < 0.0 || p.expected.array() > 1.0).count();
  if (outside > 0) {
    p.warnings.push_back(std::to_string(outside) + " expected outcome(s) outside [0, 1] (min " +
                         csv::format_double(p.expected.minCoeff()) + ", max " +
                         csv::format_double(p.expected.maxCoeff()) + ")");
  }
  return p;
}

double counterfactual_privilege(const FittedModel& model, const Scenario& scenario,
                                const NeighborStructure& neighbors, const InterventionVector& z,
                                std::size_t i, const Eigen::VectorXd& rho_prime) {
  if (i >= scenario.num_sets()) throw UsageError("set index out of range");
  const ResponseSurface surface(model, scenario, neighbors);
  const LinearTerm term = surface.privilege(i, rho_prime);
  return term.slope * surface.spillover(z)(static_cast<Eigen::Index>(i)) + term.offset;
}

}  // namespace remediate
