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

#include "remediate/solve.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "remediate/csv.hpp"
#include "remediate/error.hpp"

namespace remediate {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t required_budget(std::span<const ConstraintSpec> constraints) {
  std::optional<std::size_t> b;
  for (const auto& c : constraints) {
    if (const auto* budget = std::get_if<Budget>(&c)) b = b ? std::min(*b, budget->b) : budget->b;
  }
  if (!b) throw UsageError("every solve needs a Budget constraint");
  return *b;
}

// Best candidate seen so far under the solver ordering: lower cost wins and
// ties keep the earlier (lexicographically smaller) vector.
struct Incumbent {
  bool has = false;
  double cost = 0.0;
  InterventionVector z;

  void offer(double c, const InterventionVector& candidate) {
    if (!has || c < cost) {
      has = true;
      cost = c;
      z = candidate;
    }
  }
};

struct ScanResult {
  Incumbent feasible;
  Incumbent infeasible;  // cost field holds total violation
  std::size_t evaluated = 0;
};

// Visits every completion of z[0, pos) with at most budget ones, in
// lexicographic order.
void scan(const SearchProblem& problem, InterventionVector& z, std::size_t pos, std::size_t ones,
          ScanResult& out) {
  const std::size_t m = z.size();
  if (pos == m || ones == problem.budget()) {
    const auto eval = problem.evaluate(z);
    ++out.evaluated;
    if (eval.feasible) {
      out.feasible.offer(eval.cost, z);
    } else {
      out.infeasible.offer(eval.violation, z);
    }
    return;
  }
  scan(problem, z, pos + 1, ones, out);
  z.set(pos, true);
  scan(problem, z, pos + 1, ones + 1, out);
  z.set(pos, false);
}

// Lex-ordered prefixes of the given depth that respect the budget.
void prefixes(std::size_t depth, std::size_t budget, std::vector<std::uint8_t>& current,
              std::size_t ones, std::vector<std::pair<std::vector<std::uint8_t>, std::size_t>>& out) {
  if (current.size() == depth || ones == budget) {
    out.emplace_back(current, ones);
    return;
  }
  current.push_back(0);
  prefixes(depth, budget, current, ones, out);
  current.back() = 1;
  prefixes(depth, budget, current, ones + 1, out);
  current.pop_back();
}

}  // namespace

std::size_t count_candidates(std::size_t m, std::size_t b) {
  const std::size_t cap = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  long double binom = 1.0L;
  for (std::size_t j = 0; j <= std::min(b, m); ++j) {
    if (j > 0) binom = binom * static_cast<long double>(m - j + 1) / static_cast<long double>(j);
    if (binom >= static_cast<long double>(cap) - static_cast<long double>(total)) return cap;
    total += static_cast<std::size_t>(binom + 0.5L);
  }
  return total;
}

SearchProblem::SearchProblem(const ModelContext& context, const ObjectiveSpec& objective,
                             std::span<const ConstraintSpec> constraints)
    : scenario_(context.scenario),
      objective_(objective),
      outcome_(context.model, context.scenario, context.neighbors),
      budget_(required_budget(constraints)) {
  if (context.aggregate_model != nullptr) {
    aggregate_.emplace(*context.aggregate_model, context.scenario, context.neighbors);
  }
  constraints_.emplace(scenario_, outcome_, aggregate_ ? &*aggregate_ : nullptr,
                       std::vector<ConstraintSpec>(constraints.begin(), constraints.end()));
  // Surface empty-group errors up front rather than mid-search.
  evaluate(InterventionVector(num_sets()));
}

double SearchProblem::cost_of(double value) const {
  return objective_.sense() == Sense::kMinimize ? value : -value;
}

SearchProblem::Evaluation SearchProblem::evaluate(const InterventionVector& z) const {
  const Eigen::VectorXd spill = outcome_.spillover(z);
  Eigen::MatrixXd expected;
  outcome_.expected(spill, expected);
  Evaluation e;
  e.value = objective_value(expected, scenario_, objective_);
  e.cost = cost_of(e.value);
  e.feasible = constraints_->satisfied(z, expected, spill);
  if (!e.feasible) e.violation = constraints_->evaluate(z, expected, spill).total_violation;
  return e;
}

SearchProblem::Box SearchProblem::box(const std::vector<std::int8_t>& partial) const {
  const std::size_t m = num_sets();
  std::size_t ones = 0;
  for (auto v : partial) ones += v == 1 ? 1 : 0;
  const bool closed = ones >= budget_;
  const auto& calc = outcome_.offers_calc();
  std::vector<std::uint8_t> lo(m);
  std::vector<std::uint8_t> hi(m);
  for (std::size_t j = 0; j < m; ++j) {
    lo[j] = (calc[j] || partial[j] == 1) ? 1 : 0;
    hi[j] = (calc[j] || partial[j] == 1 || (partial[j] < 0 && !closed)) ? 1 : 0;
  }
  Box b;
  b.spill_lower = max_calc(outcome_.neighbors(), lo);
  b.spill_upper = max_calc(outcome_.neighbors(), hi);
  outcome_.expected_bounds(b.spill_lower, b.spill_upper, b.lower, b.upper);
  return b;
}

double SearchProblem::cost_lower_bound(const std::vector<std::int8_t>& partial) const {
  const Box b = box(partial);
  if (objective_.kind() == ObjectiveKind::kAggregateImpact) {
    return cost_of(aggregate_impact(b.upper, scenario_));
  }
  return disparity_lower_bound(b.lower, b.upper, scenario_, objective_);
}

bool SearchProblem::provably_infeasible(const std::vector<std::int8_t>& partial) const {
  if (constraints_->constraints().size() <= 1) {
    // Budget alone never rules out a node the search can reach.
    bool only_budget = constraints_->constraints().empty() ||
                       std::holds_alternative<Budget>(constraints_->constraints().front());
    if (only_budget) return false;
  }
  const Box b = box(partial);
  return constraints_->provably_infeasible(b.upper, b.spill_lower, b.spill_upper);
}

SolveResult SearchProblem::make_result(const InterventionVector& z, SolverStats stats,
                                       std::vector<std::string> warnings) const {
  SolveResult result;
  result.z_star = z;
  const Eigen::VectorXd spill = outcome_.spillover(z);
  const Eigen::MatrixXd expected = outcome_.expected(spill);
  result.objective_value = objective_value(expected, scenario_, objective_);
  result.feasibility = constraints_->evaluate(z, expected, spill);
  result.feasible = result.feasibility.feasible;
  try {
    result.pre_means =
        group_means(outcome_.expected(outcome_.spillover(InterventionVector(num_sets()))),
                    scenario_);
    result.post_means = group_means(expected, scenario_);
  } catch (const DataError& e) {
    warnings.push_back(std::string("group means unavailable: ") + e.what());
  }
  const auto outside = (expected.array() < 0.0 || expected.array() > 1.0).count();
  if (outside > 0) {
    warnings.push_back(std::to_string(outside) + " expected outcome(s) outside [0, 1] at z*");
  }
  result.stats = std::move(stats);
  result.warnings = std::move(warnings);
  return result;
}

SolveResult solve_enumerate(const ModelContext& context, const ObjectiveSpec& objective,
                            std::span<const ConstraintSpec> constraints,
                            const SolverOptions& options) {
  const auto start = Clock::now();
  const SearchProblem problem(context, objective, constraints);
  const std::size_t m = problem.num_sets();
  const std::size_t candidates = count_candidates(m, problem.budget());
  if (candidates > options.enumeration_limit) {
    throw UsageError("enumeration would visit " + std::to_string(candidates) +
                     " candidates, limit is " + std::to_string(options.enumeration_limit) +
                     " (use bnb or local)");
  }

  const unsigned threads = std::max(1u, options.threads);
  std::size_t depth = 0;
  while (threads > 1 && depth < m && (std::size_t{1} << depth) < 8 * threads) ++depth;
  std::vector<std::pair<std::vector<std::uint8_t>, std::size_t>> tasks;
  std::vector<std::uint8_t> scratch;
  prefixes(depth, problem.budget(), scratch, 0, tasks);

  std::vector<ScanResult> results(tasks.size());
  auto run_task = [&](std::size_t t) {
    InterventionVector z(m);
    for (std::size_t j = 0; j < tasks[t].first.size(); ++j) z.set(j, tasks[t].first[j] != 0);
    scan(problem, z, tasks[t].first.size(), tasks[t].second, results[t]);
  };
  if (threads == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&]() {
        for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Tasks are in lexicographic order, so folding them in order with the
  // strict-improvement rule reproduces the serial scan exactly.
  Incumbent best;
  Incumbent least_violation;
  SolverStats stats;
  stats.solver = "enumerate";
  for (const auto& r : results) {
    if (r.feasible.has) best.offer(r.feasible.cost, r.feasible.z);
    if (r.infeasible.has) least_violation.offer(r.infeasible.cost, r.infeasible.z);
    stats.candidates_evaluated += r.evaluated;
  }
  stats.nodes_explored = stats.candidates_evaluated;
  stats.proven_optimal = true;
  std::vector<std::string> warnings;
  InterventionVector chosen = best.has ? best.z : least_violation.z;
  if (!best.has) warnings.push_back("no feasible intervention; returning least-violation candidate");
  stats.wall_seconds = seconds_since(start);
  return problem.make_result(chosen, std::move(stats), std::move(warnings));
}

namespace {

class BranchAndBound {
 public:
  BranchAndBound(const SearchProblem& problem, std::size_t node_limit)
      : problem_(problem),
        node_limit_(node_limit),
        partial_(problem.num_sets(), -1),
        z_(problem.num_sets()) {}

  void run() { visit(0, 0); }

  const Incumbent& incumbent() const { return incumbent_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t evaluated() const { return evaluated_; }
  bool truncated() const { return truncated_; }

 private:
  void visit(std::size_t pos, std::size_t ones) {
    if (truncated_) return;
    const std::size_t m = problem_.num_sets();
    const bool leaf = pos == m || ones == problem_.budget();
    if (incumbent_.has && problem_.cost_lower_bound(partial_) >= incumbent_.cost) return;
    if (problem_.provably_infeasible(partial_)) return;
    if (node_limit_ != 0 && nodes_ >= node_limit_) {
      truncated_ = true;
      return;
    }
    ++nodes_;
    if (leaf) {
      const auto eval = problem_.evaluate(z_);
      ++evaluated_;
      if (eval.feasible) incumbent_.offer(eval.cost, z_);
      return;
    }
    partial_[pos] = 0;
    visit(pos + 1, ones);
    if (ones < problem_.budget()) {
      partial_[pos] = 1;
      z_.set(pos, true);
      visit(pos + 1, ones + 1);
      z_.set(pos, false);
    }
    partial_[pos] = -1;
  }

  const SearchProblem& problem_;
  std::size_t node_limit_;
  std::vector<std::int8_t> partial_;
  InterventionVector z_;
  Incumbent incumbent_;
  std::size_t nodes_ = 0;
  std::size_t evaluated_ = 0;
  bool truncated_ = false;
};

}  // namespace

SolveResult solve_branch_bound(const ModelContext& context, const ObjectiveSpec& objective,
                               std::span<const ConstraintSpec> constraints,
                               const SolverOptions& options) {
  const auto start = Clock::now();
  const SearchProblem problem(context, objective, constraints);
  BranchAndBound search(problem, options.node_limit);
  search.run();
  SolverStats stats;
  stats.solver = "bnb";
  stats.nodes_explored = search.nodes();
  stats.candidates_evaluated = search.evaluated();
  stats.proven_optimal = !search.truncated();
  std::vector<std::string> warnings;
  if (search.truncated()) {
    warnings.push_back("node limit " + std::to_string(options.node_limit) +
                       " reached; result is the best incumbent, optimality not proven");
  }
  if (search.incumbent().has) {
    stats.wall_seconds = seconds_since(start);
    return problem.make_result(search.incumbent().z, std::move(stats), std::move(warnings));
  }
  if (!search.truncated() &&
      count_candidates(problem.num_sets(), problem.budget()) <= options.enumeration_limit) {
    // Nothing feasible: fall back to the scan to attach the same
    // least-violation candidate enumeration reports.
    SolveResult fallback = solve_enumerate(context, objective, constraints, options);
    fallback.stats.solver = "bnb";
    fallback.stats.nodes_explored += stats.nodes_explored;
    fallback.stats.wall_seconds = seconds_since(start);
    return fallback;
  }
  warnings.push_back("no feasible intervention found");
  stats.wall_seconds = seconds_since(start);
  return problem.make_result(InterventionVector(problem.num_sets()), std::move(stats),
                             std::move(warnings));
}

namespace {

// (infeasible, violation, cost): smaller is better.
using Key = std::tuple<int, double, double>;

Key key_of(const SearchProblem::Evaluation& e) {
  return {e.feasible ? 0 : 1, e.feasible ? 0.0 : e.violation, e.cost};
}

struct LocalState {
  InterventionVector z;
  Key key;
};

// Best-improvement over add and drop moves, then first-improvement over
// swaps in a seeded order, until no move improves the key.
LocalState descend(const SearchProblem& problem, LocalState state, std::mt19937_64& rng,
                   std::size_t& evaluated) {
  const std::size_t m = problem.num_sets();
  const std::size_t b = problem.budget();
  while (true) {
    std::optional<LocalState> best;
    auto consider = [&](InterventionVector candidate) {
      const Key k = key_of(problem.evaluate(candidate));
      ++evaluated;
      if (k < state.key && (!best || k < best->key)) best = LocalState{std::move(candidate), k};
    };
    const std::size_t ones = state.z.count();
    for (std::size_t j = 0; j < m; ++j) {
      InterventionVector c = state.z;
      if (state.z[j]) {
        c.set(j, false);
        consider(std::move(c));
      } else if (ones < b) {
        c.set(j, true);
        consider(std::move(c));
      }
    }
    if (best) {
      state = std::move(*best);
      continue;
    }
    std::vector<std::size_t> on;
    std::vector<std::size_t> off;
    for (std::size_t j = 0; j < m; ++j) (state.z[j] ? on : off).push_back(j);
    std::shuffle(on.begin(), on.end(), rng);
    std::shuffle(off.begin(), off.end(), rng);
    bool moved = false;
    for (std::size_t a : on) {
      for (std::size_t c : off) {
        InterventionVector cand = state.z;
        cand.set(a, false);
        cand.set(c, true);
        const Key k = key_of(problem.evaluate(cand));
        ++evaluated;
        if (k < state.key) {
          state = LocalState{std::move(cand), k};
          moved = true;
          break;
        }
      }
      if (moved) break;
    }
    if (!moved) return state;
  }
}

}  // namespace

SolveResult solve_local_search(const ModelContext& context, const ObjectiveSpec& objective,
                               std::span<const ConstraintSpec> constraints,
                               const SolverOptions& options) {
  const auto start = Clock::now();
  const SearchProblem problem(context, objective, constraints);
  const std::size_t m = problem.num_sets();
  const std::size_t b = problem.budget();
  std::mt19937_64 rng(options.seed);
  std::size_t evaluated = 0;

  LocalState zero{InterventionVector(m), key_of(problem.evaluate(InterventionVector(m)))};
  ++evaluated;
  std::optional<LocalState> best;
  auto keep = [&](const LocalState& s) {
    if (!best || s.key < best->key || (s.key == best->key && s.z < best->z)) best = s;
  };

  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  std::size_t done = 0;
  if (b == 0) {
    keep(zero);
  } else {
    for (; done < restarts; ++done) {
      LocalState start_state = zero;
      if (done > 0) {
        std::uniform_int_distribution<std::size_t> how_many(1, b);
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        InterventionVector z(m);
        const std::size_t n = how_many(rng);
        for (std::size_t j = 0; j < n; ++j) z.set(idx[j], true);
        start_state = LocalState{z, key_of(problem.evaluate(z))};
        ++evaluated;
      }
      keep(descend(problem, std::move(start_state), rng, evaluated));
    }
  }

  SolverStats stats;
  stats.solver = "local";
  stats.candidates_evaluated = evaluated;
  stats.nodes_explored = evaluated;
  stats.restarts = done;
  stats.proven_optimal = false;
  stats.wall_seconds = seconds_since(start);
  std::vector<std::string> warnings;
  if (std::get<0>(best->key) != 0) warnings.push_back("local search found no feasible intervention");
  return problem.make_result(best->z, std::move(stats), std::move(warnings));
}

namespace {

struct MilpBuilder {
  const ModelContext& ctx;
  const ObjectiveSpec& objective;
  std::span<const ConstraintSpec> constraints;
  ResponseSurface outcome;
  std::vector<std::string> z_names;
  std::vector<std::string> t_names;
  std::vector<double> set_weight_total;  // W_k

  MilpBuilder(const ModelContext& c, const ObjectiveSpec& o, std::span<const ConstraintSpec> cs)
      : ctx(c), objective(o), constraints(cs), outcome(c.model, c.scenario, c.neighbors) {
    std::set<std::string> seen;
    for (const auto& s : c.scenario.sets()) {
      const std::string clean = lp::sanitize_name(s.id);
      if (!seen.insert(clean).second) {
        throw UsageError("set ids collide after LP name sanitizing: '" + s.id + "'");
      }
      z_names.push_back("z_" + clean);
      t_names.push_back("t_" + clean);
    }
  }

  static std::string mc(std::size_t i) { return "mc_" + std::to_string(i); }

  std::size_t m() const { return ctx.scenario.num_sets(); }
  std::size_t r() const { return ctx.scenario.num_groups(); }

  double slope(std::size_t i, std::size_t k) const {
    const Eigen::Index o = ctx.model.form() == ModelForm::kAggregate ? 0 : static_cast<Eigen::Index>(k);
    return outcome.slopes()(static_cast<Eigen::Index>(i), o);
  }
  double offset(std::size_t i, std::size_t k) const {
    const Eigen::Index o = ctx.model.form() == ModelForm::kAggregate ? 0 : static_cast<Eigen::Index>(k);
    return outcome.offsets()(static_cast<Eigen::Index>(i), o);
  }

  // mu_k = sum_i g_ik mc_i + h_k
  std::pair<std::vector<double>, double> mean_form(std::size_t k) const {
    double w_total = 0.0;
    for (std::size_t i = 0; i < m(); ++i) w_total += ctx.scenario.weight(i, k);
    if (!(w_total > 0.0)) {
      throw DataError("group '" + ctx.scenario.groups()[k] + "' is empty (n_k = 0)");
    }
    std::vector<double> g(m());
    double h = 0.0;
    for (std::size_t i = 0; i < m(); ++i) {
      const double w = ctx.scenario.weight(i, k) / w_total;
      g[i] = w * slope(i, k);
      h += w * offset(i, k);
    }
    return {g, h};
  }

  std::vector<lp::Term> mc_terms(const std::vector<double>& coef) const {
    std::vector<lp::Term> t;
    for (std::size_t i = 0; i < coef.size(); ++i) t.push_back({mc(i), coef[i]});
    return t;
  }

  lp::Model build() {
    lp::Model model;
    model.sense = objective.sense();
    required_budget(constraints);

    // t_j = c_j or z_j
    for (std::size_t j = 0; j < m(); ++j) {
      const double c = ctx.scenario.set(j).offers_calc ? 1.0 : 0.0;
      model.rows.push_back({"or_z_" + std::to_string(j),
                            {{t_names[j], 1.0}, {z_names[j], -1.0}},
                            lp::RowSense::kGreaterEqual, 0.0});
      model.rows.push_back({"or_c_" + std::to_string(j), {{t_names[j], 1.0}},
                            lp::RowSense::kGreaterEqual, c});
      model.rows.push_back({"or_ub_" + std::to_string(j),
                            {{t_names[j], 1.0}, {z_names[j], -1.0}},
                            lp::RowSense::kLessEqual, c});
    }
    // mc_i = max_j s_ij t_j via selection binaries w_ij (U = 1).
    for (std::size_t i = 0; i < m(); ++i) {
      lp::Row pick{"sel_" + std::to_string(i), {}, lp::RowSense::kEqual, 1.0};
      for (const auto& n : ctx.neighbors.of(i)) {
        const std::string w = "w_" + std::to_string(i) + "_" + std::to_string(n.index);
        const std::string tag = std::to_string(i) + "_" + std::to_string(n.index);
        pick.terms.push_back({w, 1.0});
        model.rows.push_back({"mcl_" + tag, {{mc(i), 1.0}, {t_names[n.index], -n.similarity}},
                              lp::RowSense::kGreaterEqual, 0.0});
        model.rows.push_back({"mcu_" + tag,
                              {{mc(i), 1.0}, {t_names[n.index], -n.similarity}, {w, 1.0}},
                              lp::RowSense::kLessEqual, 1.0});
        model.binaries.push_back(w);
      }
      model.rows.push_back(std::move(pick));
    }

    add_objective(model);
    add_constraints(model);

    for (std::size_t j = 0; j < m(); ++j) model.bounds.push_back({t_names[j], 0.0, 1.0});
    for (std::size_t i = 0; i < m(); ++i) model.bounds.push_back({mc(i), 0.0, 1.0});
    std::vector<std::string> binaries = z_names;
    binaries.insert(binaries.end(), model.binaries.begin(), model.binaries.end());
    model.binaries = std::move(binaries);
    return model;
  }

  void add_objective(lp::Model& model) {
    const double pair_weight = objective.ordered_pairs() ? 2.0 : 1.0;
    switch (objective.kind()) {
      case ObjectiveKind::kAcrossPopulationPairwise: {
        std::vector<std::pair<std::vector<double>, double>> means;
        for (std::size_t k = 0; k < r(); ++k) means.push_back(mean_form(k));
        for (std::size_t k = 0; k < r(); ++k) {
          for (std::size_t q = k + 1; q < r(); ++q) {
            const std::string u = "u_" + std::to_string(k) + "_" + std::to_string(q);
            std::vector<double> diff(m());
            for (std::size_t i = 0; i < m(); ++i) diff[i] = means[k].first[i] - means[q].first[i];
            const double h = means[k].second - means[q].second;
            add_abs_rows(model, u, diff, h);
            model.objective.push_back({u, pair_weight});
          }
        }
        return;
      }
      case ObjectiveKind::kWithinSetPairwise: {
        for (std::size_t i = 0; i < m(); ++i) {
          for (std::size_t k = 0; k < r(); ++k) {
            for (std::size_t q = k + 1; q < r(); ++q) {
              const std::string u = "u_" + std::to_string(i) + "_" + std::to_string(k) + "_" +
                                    std::to_string(q);
              std::vector<double> diff(m(), 0.0);
              diff[i] = slope(i, k) - slope(i, q);
              add_abs_rows(model, u, diff, offset(i, k) - offset(i, q));
              model.objective.push_back({u, pair_weight});
            }
          }
        }
        return;
      }
      case ObjectiveKind::kThresholdWithin: {
        const double kappa = *objective.kappa();
        for (std::size_t i = 0; i < m(); ++i) {
          for (std::size_t k = 0; k < r(); ++k) {
            const std::string s = "s_" + std::to_string(i) + "_" + std::to_string(k);
            model.rows.push_back({"short_" + std::to_string(i) + "_" + std::to_string(k),
                                  {{s, 1.0}, {mc(i), slope(i, k)}}, lp::RowSense::kGreaterEqual,
                                  kappa - offset(i, k)});
            model.objective.push_back({s, 1.0});
          }
        }
        return;
      }
      case ObjectiveKind::kThresholdAcross: {
        const double kappa = *objective.kappa();
        for (std::size_t k = 0; k < r(); ++k) {
          const auto [g, h] = mean_form(k);
          const std::string s = "s_" + std::to_string(k);
          lp::Row row{"short_" + std::to_string(k), {{s, 1.0}}, lp::RowSense::kGreaterEqual,
                      kappa - h};
          auto terms = mc_terms(g);
          row.terms.insert(row.terms.end(), terms.begin(), terms.end());
          model.rows.push_back(std::move(row));
          model.objective.push_back({s, 1.0});
        }
        return;
      }
      case ObjectiveKind::kAggregateImpact: {
        double total = 0.0;
        for (std::size_t k = 0; k < r(); ++k) {
          for (std::size_t i = 0; i < m(); ++i) total += ctx.scenario.weight(i, k);
        }
        if (!(total > 0.0)) throw DataError("scenario has no individuals (n = 0)");
        std::vector<double> g(m(), 0.0);
        double h = 0.0;
        for (std::size_t i = 0; i < m(); ++i) {
          for (std::size_t k = 0; k < r(); ++k) {
            const double w = ctx.scenario.weight(i, k) / total;
            g[i] += w * slope(i, k);
            h += w * offset(i, k);
          }
        }
        model.objective = mc_terms(g);
        model.objective_constant = h;
        return;
      }
    }
  }

  // u >= (sum diff_i mc_i + h) and u >= -(...); exact under minimization.
  static void add_abs_rows(lp::Model& model, const std::string& u, const std::vector<double>& diff,
                           double h) {
    lp::Row pos{"abs_p_" + u.substr(2), {{u, 1.0}}, lp::RowSense::kGreaterEqual, h};
    lp::Row neg{"abs_n_" + u.substr(2), {{u, 1.0}}, lp::RowSense::kGreaterEqual, -h};
    for (std::size_t i = 0; i < diff.size(); ++i) {
      if (diff[i] == 0.0) continue;
      pos.terms.push_back({mc(i), -diff[i]});
      neg.terms.push_back({mc(i), diff[i]});
    }
    model.rows.push_back(std::move(pos));
    model.rows.push_back(std::move(neg));
  }

  void add_constraints(lp::Model& model) {
    std::optional<ResponseSurface> aggregate;
    const Eigen::MatrixXd baseline = outcome.expected(outcome.spillover(InterventionVector(m())));
    std::size_t idx = 0;
    for (const auto& spec : constraints) {
      const std::string tag = std::to_string(idx++);
      if (const auto* b = std::get_if<Budget>(&spec)) {
        lp::Row row{"budget_" + tag, {}, lp::RowSense::kLessEqual, static_cast<double>(b->b)};
        for (const auto& z : z_names) row.terms.push_back({z, 1.0});
        model.rows.push_back(std::move(row));
      } else if (const auto* nh = std::get_if<NoHarmAcross>(&spec)) {
        const Eigen::VectorXd pre = group_means(baseline, ctx.scenario);
        for (std::size_t k = 0; k < r(); ++k) {
          const auto [g, h] = mean_form(k);
          model.rows.push_back({"nha_" + tag + "_" + std::to_string(k), mc_terms(g),
                                lp::RowSense::kGreaterEqual,
                                nh->eta + pre(static_cast<Eigen::Index>(k)) - h});
        }
      } else if (const auto* nw = std::get_if<NoHarmWithin>(&spec)) {
        std::vector<std::pair<std::size_t, std::size_t>> cells = nw->cells;
        if (cells.empty()) {
          for (std::size_t i = 0; i < m(); ++i) {
            for (std::size_t k = 0; k < r(); ++k) cells.emplace_back(i, k);
          }
        }
        for (const auto& [i, k] : cells) {
          model.rows.push_back(
              {"nhw_" + tag + "_" + std::to_string(i) + "_" + std::to_string(k),
               {{mc(i), slope(i, k)}},
               lp::RowSense::kGreaterEqual,
               nw->eta + baseline(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                   offset(i, k)});
        }
      } else if (const auto* ma = std::get_if<MinRateAcross>(&spec)) {
        for (std::size_t k = 0; k < r(); ++k) {
          const auto [g, h] = mean_form(k);
          model.rows.push_back({"mra_" + tag + "_" + std::to_string(k), mc_terms(g),
                                lp::RowSense::kGreaterEqual, ma->kappa - h});
        }
      } else if (const auto* mw = std::get_if<MinRateWithin>(&spec)) {
        for (std::size_t i = 0; i < m(); ++i) {
          for (std::size_t k = 0; k < r(); ++k) {
            model.rows.push_back({"mrw_" + tag + "_" + std::to_string(i) + "_" + std::to_string(k),
                                  {{mc(i), slope(i, k)}},
                                  lp::RowSense::kGreaterEqual,
                                  mw->kappa - offset(i, k)});
          }
        }
      } else if (const auto* cp = std::get_if<CounterfactualPrivilege>(&spec)) {
        if (ctx.aggregate_model == nullptr) {
          throw UsageError(
              "counterfactual privilege constraint needs the aggregate model (DIP mode)");
        }
        if (!aggregate) aggregate.emplace(*ctx.aggregate_model, ctx.scenario, ctx.neighbors);
        // Strict c < tau written with a 1e-12 margin.
        for (std::size_t i = 0; i < m(); ++i) {
          for (std::size_t k = 0; k < r(); ++k) {
            Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r()));
            one_hot(static_cast<Eigen::Index>(k)) = 1.0;
            const LinearTerm term = aggregate->privilege(i, one_hot);
            model.rows.push_back({"cfp_" + tag + "_" + std::to_string(i) + "_" + std::to_string(k),
                                  {{mc(i), term.slope}},
                                  lp::RowSense::kLessEqual,
                                  cp->tau - term.offset - 1e-12});
          }
        }
      }
    }
  }
};

}  // namespace

lp::Model build_milp(const ModelContext& context, const ObjectiveSpec& objective,
                     std::span<const ConstraintSpec> constraints) {
  return MilpBuilder(context, objective, constraints).build();
}

lp::Assignment implied_assignment(const ModelContext& context, const ObjectiveSpec& objective,
                                  const InterventionVector& z) {
  MilpBuilder builder(context, objective, {});
  const std::size_t m = builder.m();
  const std::size_t r = builder.r();
  lp::Assignment values;
  const auto treated = builder.outcome.treated(z);
  const Eigen::VectorXd spill = max_calc(context.neighbors, treated);
  for (std::size_t j = 0; j < m; ++j) {
    values[builder.z_names[j]] = z[j] ? 1.0 : 0.0;
    values[builder.t_names[j]] = treated[j];
  }
  for (std::size_t i = 0; i < m; ++i) {
    values[MilpBuilder::mc(i)] = spill(static_cast<Eigen::Index>(i));
    bool chosen = false;
    for (const auto& n : context.neighbors.of(i)) {
      const double v = treated[n.index] ? n.similarity : 0.0;
      const bool pick = !chosen && v == spill(static_cast<Eigen::Index>(i));
      chosen = chosen || pick;
      values["w_" + std::to_string(i) + "_" + std::to_string(n.index)] = pick ? 1.0 : 0.0;
    }
  }
  const Eigen::MatrixXd expected = builder.outcome.expected(spill);
  switch (objective.kind()) {
    case ObjectiveKind::kAcrossPopulationPairwise: {
      const Eigen::VectorXd mu = group_means(expected, context.scenario);
      for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t q = k + 1; q < r; ++q) {
          values["u_" + std::to_string(k) + "_" + std::to_string(q)] =
              std::fabs(mu(static_cast<Eigen::Index>(k)) - mu(static_cast<Eigen::Index>(q)));
        }
      }
      break;
    }
    case ObjectiveKind::kWithinSetPairwise:
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < r; ++k) {
          for (std::size_t q = k + 1; q < r; ++q) {
            values["u_" + std::to_string(i) + "_" + std::to_string(k) + "_" + std::to_string(q)] =
                std::fabs(expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                          expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)));
          }
        }
      }
      break;
    case ObjectiveKind::kThresholdWithin:
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < r; ++k) {
          values["s_" + std::to_string(i) + "_" + std::to_string(k)] = std::max(
              *objective.kappa() -
                  expected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
              0.0);
        }
      }
      break;
    case ObjectiveKind::kThresholdAcross: {
      const Eigen::VectorXd mu = group_means(expected, context.scenario);
      for (std::size_t k = 0; k < r; ++k) {
        values["s_" + std::to_string(k)] =
            std::max(*objective.kappa() - mu(static_cast<Eigen::Index>(k)), 0.0);
      }
      break;
    }
    case ObjectiveKind::kAggregateImpact:
      break;
  }
  return values;
}

void export_milp(const ModelContext& context, const ObjectiveSpec& objective,
                 std::span<const ConstraintSpec> constraints, const std::filesystem::path& path) {
  const lp::Model model = build_milp(context, objective, constraints);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError(path.string() + ": cannot write LP file");
  out << lp::write(model);
  if (!out) throw UsageError(path.string() + ": write failed");
}

}  // namespace remediate
