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

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "remediate/constraint.hpp"
#include "remediate/csv.hpp"
#include "remediate/error.hpp"
#include "remediate/objective.hpp"
#include "remediate/scenario.hpp"
#include "remediate/scm.hpp"
#include "remediate/solve.hpp"
#include "remediate/synth.hpp"

namespace remediate::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Values given on the command line. Unset flags fall back to the config file.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> sets;
  std::optional<std::string> slices;
  std::optional<std::string> model;
  std::optional<std::string> aggregate_model;
  std::optional<std::string> objective;
  std::optional<std::size_t> budget;
  std::optional<std::string> solver;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<double> tau;
  std::optional<double> kappa;
  std::optional<double> eta;
  std::optional<int> neighbor_k;
  std::optional<unsigned> threads;
  std::optional<std::string> variants;
  std::optional<std::size_t> m;
  std::optional<std::size_t> r;
  std::optional<double> noise_sd;
};

struct RunConfig {
  std::optional<fs::path> sets;
  std::optional<fs::path> slices;
  std::optional<fs::path> weights;
  std::optional<fs::path> model;
  std::optional<fs::path> aggregate_model;
  int neighbor_k = 5;
  std::string objective = "across";
  bool ordered_pairs = false;
  std::optional<double> kappa;
  std::optional<std::size_t> budget;
  std::string solver = "bnb";
  std::uint64_t seed = 0;
  std::optional<fs::path> out;
  std::string mode = "IR";
  std::optional<double> tau;
  std::optional<double> eta;
  bool weight_by_count = false;
  SolverOptions solver_options;
  json constraints = json::array();
  std::vector<std::string> variants;
};

const std::set<std::string> kConfigKeys = {
    "sets",      "slices",  "weights_path", "model",     "aggregate_model", "neighbor_k",
    "objective", "ordered_pairs", "kappa",  "budget",    "solver",          "seed",
    "out",       "mode",    "tau",          "eta",       "weight_by_count", "threads",
    "enumeration_limit", "node_limit", "restarts", "constraints", "variants"};

template <typename T>
T get_as(const json& doc, const std::string& key, const fs::path& source) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(source.string() + ": config key '" + key + "' has the wrong type");
  }
}

RunConfig load_config(const Flags& flags) {
  RunConfig cfg;
  if (flags.config) {
    const fs::path path = *flags.config;
    std::ifstream in(path);
    if (!in) throw UsageError(path.string() + ": cannot open config");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw UsageError(path.string() + ": config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (!kConfigKeys.count(key)) throw UsageError(path.string() + ": unknown config key '" + key + "'");
    }
    const fs::path base = path.parent_path();
    auto path_key = [&](const char* key) -> std::optional<fs::path> {
      if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
      fs::path p = get_as<std::string>(doc, key, path);
      return p.is_relative() ? base / p : p;
    };
    cfg.sets = path_key("sets");
    cfg.slices = path_key("slices");
    cfg.weights = path_key("weights_path");
    cfg.model = path_key("model");
    cfg.aggregate_model = path_key("aggregate_model");
    cfg.out = path_key("out");
    if (doc.contains("neighbor_k")) cfg.neighbor_k = get_as<int>(doc, "neighbor_k", path);
    if (doc.contains("objective")) cfg.objective = get_as<std::string>(doc, "objective", path);
    if (doc.contains("ordered_pairs")) cfg.ordered_pairs = get_as<bool>(doc, "ordered_pairs", path);
    if (doc.contains("kappa")) cfg.kappa = get_as<double>(doc, "kappa", path);
    if (doc.contains("budget")) cfg.budget = get_as<std::size_t>(doc, "budget", path);
    if (doc.contains("solver")) cfg.solver = get_as<std::string>(doc, "solver", path);
    if (doc.contains("seed")) cfg.seed = get_as<std::uint64_t>(doc, "seed", path);
    if (doc.contains("mode")) cfg.mode = get_as<std::string>(doc, "mode", path);
    if (doc.contains("tau")) cfg.tau = get_as<double>(doc, "tau", path);
    if (doc.contains("eta")) cfg.eta = get_as<double>(doc, "eta", path);
    if (doc.contains("weight_by_count")) {
      cfg.weight_by_count = get_as<bool>(doc, "weight_by_count", path);
    }
    if (doc.contains("threads")) cfg.solver_options.threads = get_as<unsigned>(doc, "threads", path);
    if (doc.contains("enumeration_limit")) {
      cfg.solver_options.enumeration_limit = get_as<std::size_t>(doc, "enumeration_limit", path);
    }
    if (doc.contains("node_limit")) {
      cfg.solver_options.node_limit = get_as<std::size_t>(doc, "node_limit", path);
    }
    if (doc.contains("restarts")) {
      cfg.solver_options.restarts = get_as<std::size_t>(doc, "restarts", path);
    }
    if (doc.contains("constraints")) {
      if (!doc["constraints"].is_array()) throw UsageError(path.string() + ": constraints must be a list");
      cfg.constraints = doc["constraints"];
    }
    if (doc.contains("variants")) cfg.variants = get_as<std::vector<std::string>>(doc, "variants", path);
  }
  if (flags.sets) cfg.sets = *flags.sets;
  if (flags.slices) cfg.slices = *flags.slices;
  if (flags.model) cfg.model = *flags.model;
  if (flags.aggregate_model) cfg.aggregate_model = *flags.aggregate_model;
  if (flags.objective) cfg.objective = *flags.objective;
  if (flags.budget) cfg.budget = *flags.budget;
  if (flags.solver) cfg.solver = *flags.solver;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out = *flags.out;
  if (flags.mode) cfg.mode = *flags.mode;
  if (flags.tau) cfg.tau = *flags.tau;
  if (flags.kappa) cfg.kappa = *flags.kappa;
  if (flags.eta) cfg.eta = *flags.eta;
  if (flags.neighbor_k) cfg.neighbor_k = *flags.neighbor_k;
  if (flags.threads) cfg.solver_options.threads = *flags.threads;
  if (flags.variants) {
    cfg.variants.clear();
    std::stringstream in(*flags.variants);
    for (std::string v; std::getline(in, v, ',');) {
      if (!v.empty()) cfg.variants.push_back(v);
    }
  }
  cfg.solver_options.seed = cfg.seed;
  if (cfg.mode != "IR" && cfg.mode != "DIP") throw UsageError("mode must be IR or DIP");
  if (cfg.solver != "enumerate" && cfg.solver != "bnb" && cfg.solver != "local") {
    throw UsageError("solver must be enumerate, bnb or local");
  }
  if (cfg.neighbor_k < 0) throw UsageError("neighbor_k must be non-negative");
  return cfg;
}

// Everything loaded from disk for one run.
struct Instance {
  Scenario scenario;
  NeighborStructure neighbors;
  FittedModel model;
  std::optional<FittedModel> aggregate;
};

Scenario load_scenario_for(const RunConfig& cfg) {
  if (!cfg.sets || !cfg.slices) throw UsageError("--sets and --slices are required");
  ScenarioOptions options;
  options.neighbor_k = cfg.neighbor_k;
  options.weights_path = cfg.weights;
  return load_scenario(*cfg.sets, *cfg.slices, options);
}

FittedModel load_model(const fs::path& path, ModelForm form) {
  FittedModel model = FittedModel::load(path);
  if (model.form() != form) {
    throw UsageError(path.string() + ": expected a " +
                     (form == ModelForm::kAggregate ? "aggregate" : "disaggregated") + " model");
  }
  return model;
}

Instance load_instance(const RunConfig& cfg, bool need_aggregate) {
  Scenario scenario = load_scenario_for(cfg);
  NeighborStructure neighbors = build_neighbor_structure(scenario);
  FitOptions fit_options;
  fit_options.weight_by_count = cfg.weight_by_count;
  FittedModel model = cfg.model ? load_model(*cfg.model, ModelForm::kDisaggregated)
                                : fit(scenario, neighbors, fit_options);
  std::optional<FittedModel> aggregate;
  if (need_aggregate) {
    aggregate = cfg.aggregate_model ? load_model(*cfg.aggregate_model, ModelForm::kAggregate)
                                    : fit_aggregate(scenario, neighbors, fit_options);
  }
  return Instance{std::move(scenario), std::move(neighbors), std::move(model), std::move(aggregate)};
}

std::size_t set_index(const Scenario& scenario, const std::string& id) {
  const auto i = scenario.find_set(id);
  if (!i) throw UsageError("constraint names unknown set '" + id + "'");
  return *i;
}

std::size_t group_index(const Scenario& scenario, const std::string& label) {
  const auto k = scenario.find_group(label);
  if (!k) throw UsageError("constraint names unknown group '" + label + "'");
  return *k;
}

double number(const json& entry, const char* key) {
  if (!entry.contains(key) || !entry[key].is_number()) {
    throw UsageError(std::string("constraint '") + entry.value("type", "?") + "' needs numeric '" +
                     key + "'");
  }
  return entry[key].get<double>();
}

// Config constraint entries: {"type": ..., parameters}.
std::vector<ConstraintSpec> config_constraints(const RunConfig& cfg, const Scenario& scenario) {
  std::vector<ConstraintSpec> out;
  for (const auto& entry : cfg.constraints) {
    if (!entry.is_object() || !entry.contains("type") || !entry["type"].is_string()) {
      throw UsageError("each constraint needs a string 'type'");
    }
    const std::string type = entry["type"].get<std::string>();
    if (type == "budget") {
      const double b = number(entry, "b");
      if (b < 0 || b != static_cast<double>(static_cast<std::size_t>(b))) {
        throw UsageError("budget b must be a non-negative integer");
      }
      out.push_back(Budget{static_cast<std::size_t>(b)});
    } else if (type == "no_harm_across") {
      out.push_back(NoHarmAcross{entry.contains("eta") ? number(entry, "eta") : 0.0});
    } else if (type == "no_harm_within") {
      NoHarmWithin c{entry.contains("eta") ? number(entry, "eta") : 0.0, {}};
      if (entry.contains("cells")) {
        for (const auto& cell : entry["cells"]) {
          if (!cell.is_array() || cell.size() != 2 || !cell[0].is_string() || !cell[1].is_string()) {
            throw UsageError("no_harm_within cells are [set_id, group] pairs");
          }
          c.cells.emplace_back(set_index(scenario, cell[0].get<std::string>()),
                               group_index(scenario, cell[1].get<std::string>()));
        }
      }
      out.push_back(std::move(c));
    } else if (type == "min_rate_across") {
      out.push_back(MinRateAcross{number(entry, "kappa")});
    } else if (type == "min_rate_within") {
      out.push_back(MinRateWithin{number(entry, "kappa")});
    } else if (type == "privilege") {
      out.push_back(CounterfactualPrivilege{number(entry, "tau")});
    } else {
      throw UsageError("unknown constraint type '" + type + "'");
    }
  }
  return out;
}

std::vector<ConstraintSpec> base_constraints(const RunConfig& cfg, const Scenario& scenario) {
  if (!cfg.budget) throw UsageError("--budget is required");
  std::vector<ConstraintSpec> out = {Budget{*cfg.budget}};
  for (auto& c : config_constraints(cfg, scenario)) out.push_back(std::move(c));
  return out;
}

ObjectiveSpec ir_objective(const RunConfig& cfg) {
  return ObjectiveSpec::parse(cfg.objective, cfg.kappa, cfg.ordered_pairs);
}

// Disparity measure reported next to every solve.
ObjectiveSpec reported_measure(const RunConfig& cfg) {
  const ObjectiveSpec spec = ir_objective(cfg);
  return spec.is_disparity() ? spec : ObjectiveSpec::across_population_pairwise(cfg.ordered_pairs);
}

SolveResult run_solver(const std::string& solver, const ModelContext& ctx, const ObjectiveSpec& objective,
                       const std::vector<ConstraintSpec>& constraints, const SolverOptions& options) {
  if (solver == "enumerate") return solve_enumerate(ctx, objective, constraints, options);
  if (solver == "local") return solve_local_search(ctx, objective, constraints, options);
  return solve_branch_bound(ctx, objective, constraints, options);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError(path.string() + ": cannot write");
  out << content;
  if (!out) throw UsageError(path.string() + ": write failed");
}

fs::path require_out(const RunConfig& cfg) {
  if (!cfg.out) throw UsageError("--out is required");
  return *cfg.out;
}

fs::path out_dir(const RunConfig& cfg) {
  const fs::path dir = require_out(cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError(dir.string() + ": cannot create directory: " + ec.message());
  return dir;
}

// Up to four decimals, trailing zeros dropped: 0.0814, 0.06.
std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s += '0';
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string result_csv(const Scenario& scenario, const InterventionVector& z) {
  std::ostringstream out;
  csv::write_row(out, {"set_id", "z"});
  for (std::size_t i = 0; i < scenario.num_sets(); ++i) {
    csv::write_row(out, {scenario.set(i).id, z[i] ? "1" : "0"});
  }
  return out.str();
}

std::string selected_geojson(const Scenario& scenario, const InterventionVector& z) {
  json features = json::array();
  for (std::size_t i = 0; i < scenario.num_sets(); ++i) {
    if (!z[i]) continue;
    const auto& s = scenario.set(i);
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {s.longitude, s.latitude}}}},
                        {"properties",
                         {{"id", s.id},
                          {"counselors", s.counselors},
                          {"offers_ap", s.offers_ap},
                          {"offers_calc", s.offers_calc}}}});
  }
  const json doc = {{"type", "FeatureCollection"}, {"features", features}};
  return doc.dump(2) + "\n";
}

std::string margins_text(const std::vector<ConstraintSpec>& constraints,
                         const std::vector<ConstraintMargin>& margins) {
  std::ostringstream out;
  for (const auto& m : margins) {
    out << "  " << (m.satisfied ? "ok  " : "FAIL") << " " << describe(constraints.at(m.constraint));
    if (!m.item.empty()) out << " [" << m.item << "]";
    out << " margin " << csv::format_double(m.margin) << "\n";
  }
  return out.str();
}

std::string group_summary(const Scenario& scenario) {
  std::ostringstream out;
  const GroupTotals totals = group_totals(scenario);
  out << "sets: " << scenario.num_sets() << "\n";
  out << "groups: " << scenario.num_groups() << "\n";
  for (std::size_t k = 0; k < scenario.num_groups(); ++k) {
    out << "  " << scenario.groups()[k] << ": n = " << csv::format_double(totals.per_group[k]) << "\n";
  }
  out << "individuals: " << csv::format_double(totals.total) << "\n";
  return out.str();
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const Scenario scenario = load_scenario_for(cfg);
  out << group_summary(scenario);
  out << "neighbor_k: " << scenario.neighbor_k() << "\n";
  const ObjectiveSpec measure = reported_measure(cfg);
  out << "observed disparity (" << measure.name() << "): "
      << csv::format_double(observed_disparity(scenario, measure)) << "\n";
  if (cfg.model) {
    const NeighborStructure neighbors = build_neighbor_structure(scenario);
    const FittedModel model = FittedModel::load(*cfg.model);
    const Prediction p = predict(model, scenario, neighbors, InterventionVector(scenario.num_sets()));
    out << "model: " << cfg.model->string() << " matches scenario groups\n";
    for (const auto& w : p.warnings) out << "warning: " << w << "\n";
  }
  out << "ok\n";
  return kOk;
}

std::string diagnostics_text(const FittedModel& model) {
  std::ostringstream out;
  for (std::size_t o = 0; o < model.diagnostics().size(); ++o) {
    const auto& d = model.diagnostics()[o];
    const std::string label = model.form() == ModelForm::kAggregate ? "*" : model.groups()[o];
    out << "  " << label << ": rss " << csv::format_double(d.rss) << ", rank " << d.rank << ", condition "
        << csv::format_double(d.condition) << ", observations " << d.observations << "\n";
  }
  return out.str();
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const Scenario scenario = load_scenario_for(cfg);
  const NeighborStructure neighbors = build_neighbor_structure(scenario);
  FitOptions options;
  options.weight_by_count = cfg.weight_by_count;
  const FittedModel model = fit(scenario, neighbors, options);
  const FittedModel aggregate = fit_aggregate(scenario, neighbors, options);
  const fs::path dir = out_dir(cfg);
  model.save(dir / "model.txt");
  aggregate.save(dir / "aggregate_model.txt");
  out << "disaggregated model -> " << (dir / "model.txt").string() << "\n" << diagnostics_text(model);
  out << "aggregate model -> " << (dir / "aggregate_model.txt").string() << "\n"
      << diagnostics_text(aggregate);
  return kOk;
}

struct SolvePlan {
  ObjectiveSpec objective;
  std::vector<ConstraintSpec> constraints;
};

SolvePlan solve_plan(const RunConfig& cfg, const Scenario& scenario) {
  std::vector<ConstraintSpec> constraints = base_constraints(cfg, scenario);
  if (cfg.eta) constraints.push_back(NoHarmAcross{*cfg.eta});
  if (cfg.tau) constraints.push_back(CounterfactualPrivilege{*cfg.tau});
  if (cfg.mode == "DIP") return {ObjectiveSpec::aggregate_impact(), std::move(constraints)};
  return {ir_objective(cfg), std::move(constraints)};
}

bool plan_needs_aggregate(const RunConfig& cfg) {
  if (cfg.mode == "DIP" || cfg.tau) return true;
  for (const auto& c : cfg.constraints) {
    if (c.is_object() && c.value("type", "") == "privilege") return true;
  }
  return false;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Instance inst = load_instance(cfg, plan_needs_aggregate(cfg));
  const SolvePlan plan = solve_plan(cfg, inst.scenario);
  const ModelContext ctx{inst.scenario, inst.neighbors, inst.model,
                         inst.aggregate ? &*inst.aggregate : nullptr};
  const SolveResult result = run_solver(cfg.solver, ctx, plan.objective, plan.constraints, cfg.solver_options);

  const ResponseSurface surface(inst.model, inst.scenario, inst.neighbors);
  const Eigen::MatrixXd pre = surface.expected(surface.spillover(InterventionVector(inst.scenario.num_sets())));
  const Eigen::MatrixXd post = surface.expected(surface.spillover(result.z_star));
  const ObjectiveSpec measure = reported_measure(cfg);
  const ChangeReport report = change_report(pre, post, inst.scenario, measure);

  std::ostringstream summary;
  summary << "mode: " << cfg.mode << "\n";
  summary << "objective: " << plan.objective.name() << "\n";
  summary << "solver: " << result.stats.solver << (result.stats.proven_optimal ? " (optimal)" : " (heuristic)")
          << "\n";
  summary << "budget: " << *cfg.budget << "\n";
  summary << "selected: " << result.z_star.count() << " of " << inst.scenario.num_sets() << "\n";
  for (std::size_t i = 0; i < inst.scenario.num_sets(); ++i) {
    if (result.z_star[i]) summary << "  " << inst.scenario.set(i).id << "\n";
  }
  summary << "δ: " << short_number(report.disparity_pre) << " → " << short_number(report.disparity_post)
          << "\n";
  summary << "disparity (" << measure.name() << "): " << csv::format_double(report.disparity_pre) << " -> "
          << csv::format_double(report.disparity_post) << "\n";
  summary << "objective value: " << csv::format_double(result.objective_value) << "\n";
  summary << "feasible: " << (result.feasible ? "yes" : "no") << "\n";
  if (!result.feasibility.margins.empty()) {
    summary << "constraints:\n" << margins_text(plan.constraints, result.feasibility.margins);
  }
  summary << "\n" << report_table(report);
  for (const auto& w : result.warnings) summary << "warning: " << w << "\n";

  const fs::path dir = out_dir(cfg);
  write_file(dir / "result.csv", result_csv(inst.scenario, result.z_star));
  write_file(dir / "report.csv", report_csv(report));
  write_file(dir / "summary.txt", summary.str());
  write_file(dir / "selected.geojson", selected_geojson(inst.scenario, result.z_star));
  out << summary.str();
  if (!result.feasible) {
    err << "infeasible: no intervention satisfies every constraint; violations:\n"
        << margins_text(plan.constraints, result.feasibility.violations);
    return kInfeasible;
  }
  return kOk;
}

struct ComparisonRow {
  std::string variant;
  std::size_t selected = 0;
  bool feasible = true;
  double disparity = 0.0;
  std::optional<double> aggregate_pct;
  std::vector<std::optional<double>> group_pct;
};

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> variants = cfg.variants;
  if (variants.empty()) {
    variants = {"IR", "IR+no-harm"};
    if (cfg.tau) variants.push_back("DIP(tau)");
    variants.push_back("DIP-unconstrained");
  }
  bool need_aggregate = false;
  for (const auto& v : variants) {
    if (v != "IR" && v != "IR+no-harm" && v != "DIP(tau)" && v != "DIP-unconstrained") {
      throw UsageError("unknown variant '" + v + "' (IR, IR+no-harm, DIP(tau), DIP-unconstrained)");
    }
    need_aggregate = need_aggregate || v == "DIP(tau)";
  }
  if (std::find(variants.begin(), variants.end(), "DIP(tau)") != variants.end() && !cfg.tau) {
    throw UsageError("variant DIP(tau) needs --tau");
  }
  const ObjectiveSpec measure = ir_objective(cfg);
  if (!measure.is_disparity()) throw UsageError("compare needs a disparity objective for the IR variants");

  for (const auto& c : cfg.constraints) {
    if (c.is_object() && c.value("type", "") == "privilege") need_aggregate = true;
  }
  const Instance inst = load_instance(cfg, need_aggregate);
  const std::vector<ConstraintSpec> base = base_constraints(cfg, inst.scenario);
  const ModelContext ctx{inst.scenario, inst.neighbors, inst.model,
                         inst.aggregate ? &*inst.aggregate : nullptr};
  const ResponseSurface surface(inst.model, inst.scenario, inst.neighbors);
  const std::size_t m = inst.scenario.num_sets();
  const Eigen::MatrixXd pre = surface.expected(surface.spillover(InterventionVector(m)));

  auto row_for = [&](const std::string& name, const InterventionVector& z, bool feasible) {
    const Eigen::MatrixXd post = surface.expected(surface.spillover(z));
    const ChangeReport report = change_report(pre, post, inst.scenario, measure);
    ComparisonRow row;
    row.variant = name;
    row.selected = z.count();
    row.feasible = feasible;
    row.disparity = report.disparity_post;
    row.aggregate_pct = report.aggregate.pct_change;
    for (const auto& g : report.groups) row.group_pct.push_back(g.pct_change);
    return row;
  };

  std::vector<ComparisonRow> rows = {row_for("baseline", InterventionVector(m), true)};
  bool all_feasible = true;
  std::vector<std::string> warnings;
  for (const auto& v : variants) {
    std::vector<ConstraintSpec> constraints = base;
    ObjectiveSpec objective = measure;
    std::string label = v;
    if (v == "IR+no-harm") {
      constraints.push_back(NoHarmAcross{cfg.eta.value_or(0.0)});
    } else if (v == "DIP(tau)") {
      objective = ObjectiveSpec::aggregate_impact();
      constraints.push_back(CounterfactualPrivilege{*cfg.tau});
      label = "DIP(tau=" + csv::format_double(*cfg.tau) + ")";
    } else if (v == "DIP-unconstrained") {
      objective = ObjectiveSpec::aggregate_impact();
    }
    const SolveResult result = run_solver(cfg.solver, ctx, objective, constraints, cfg.solver_options);
    all_feasible = all_feasible && result.feasible;
    for (const auto& w : result.warnings) warnings.push_back(label + ": " + w);
    rows.push_back(row_for(label, result.z_star, result.feasible));
  }

  std::ostringstream csv_out;
  std::vector<std::string> header = {"variant", "selected", "feasible", "disparity", "aggregate_pct"};
  for (const auto& g : inst.scenario.groups()) header.push_back(g + "_pct");
  csv::write_row(csv_out, header);
  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %8s %9s %12s %10s", "variant", "selected", "feasible", "disparity",
                "aggregate%");
  table << line;
  for (const auto& g : inst.scenario.groups()) {
    std::snprintf(line, sizeof(line), " %10s", (g + "%").c_str());
    table << line;
  }
  table << "\n";
  for (const auto& row : rows) {
    std::vector<std::string> fields = {row.variant, std::to_string(row.selected), row.feasible ? "1" : "0",
                                       csv::format_double(row.disparity), format_pct(row.aggregate_pct)};
    for (const auto& p : row.group_pct) fields.push_back(format_pct(p));
    csv::write_row(csv_out, fields);
    std::snprintf(line, sizeof(line), "%-22s %8zu %9s %12.6f %10s", row.variant.c_str(), row.selected,
                  row.feasible ? "yes" : "no", row.disparity, format_pct(row.aggregate_pct).c_str());
    table << line;
    for (const auto& p : row.group_pct) {
      std::snprintf(line, sizeof(line), " %10s", format_pct(p).c_str());
      table << line;
    }
    table << "\n";
  }
  for (const auto& w : warnings) table << "warning: " << w << "\n";

  const fs::path dir = out_dir(cfg);
  write_file(dir / "comparison.csv", csv_out.str());
  write_file(dir / "comparison.txt", table.str());
  out << table.str();
  if (!all_feasible) {
    err << "infeasible: at least one variant has no feasible intervention\n";
    return kInfeasible;
  }
  return kOk;
}

std::string generated_config(int neighbor_k, bool with_model, std::optional<std::size_t> budget) {
  json doc = {{"sets", "sets.csv"}, {"slices", "slices.csv"}, {"neighbor_k", neighbor_k},
              {"objective", "across"}};
  if (with_model) doc["model"] = "model.txt";
  if (budget) doc["budget"] = *budget;
  return doc.dump(2) + "\n";
}

int cmd_gen_toy(const RunConfig& cfg, std::ostream& out) {
  const GroundTruth truth = gen_toy_career_fair();
  const fs::path dir = out_dir(cfg);
  write_scenario(truth.scenario, dir);
  truth.model.save(dir / "model.txt");
  write_file(dir / "config.json", generated_config(truth.scenario.neighbor_k(), true, 1));
  out << "toy scenario -> " << dir.string() << "\n" << group_summary(truth.scenario);
  return kOk;
}

int cmd_gen_random(const RunConfig& cfg, const Flags& flags, std::ostream& out) {
  if (!flags.m || !flags.r) throw UsageError("gen-random needs --m and --r");
  const GroundTruth truth =
      gen_random(cfg.seed, *flags.m, *flags.r, cfg.neighbor_k, flags.noise_sd.value_or(0.0));
  const fs::path dir = out_dir(cfg);
  write_scenario(truth.scenario, dir);
  truth.model.save(dir / "truth_model.txt");
  write_file(dir / "config.json", generated_config(truth.scenario.neighbor_k(), false, cfg.budget));
  out << "random scenario (seed " << cfg.seed << ") -> " << dir.string() << "\n" << group_summary(truth.scenario);
  for (const auto& w : truth.warnings) out << "warning: " << w << "\n";
  return kOk;
}

int cmd_export_milp(const RunConfig& cfg, std::ostream& out) {
  const Instance inst = load_instance(cfg, plan_needs_aggregate(cfg));
  const SolvePlan plan = solve_plan(cfg, inst.scenario);
  const ModelContext ctx{inst.scenario, inst.neighbors, inst.model,
                         inst.aggregate ? &*inst.aggregate : nullptr};
  const fs::path path = require_out(cfg);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const lp::Model model = build_milp(ctx, plan.objective, plan.constraints);
  write_file(path, lp::write(model));
  out << "milp -> " << path.string() << ": " << model.rows.size() << " rows, " << model.binaries.size()
      << " binaries\n";
  return kOk;
}

void add_scenario_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run config; flags override its keys");
  cmd->add_option("--sets", f.sets, "sets.csv");
  cmd->add_option("--slices", f.slices, "slices.csv");
  cmd->add_option("--neighbor-k", f.neighbor_k, "nearest neighbors per set");
  cmd->add_option("--objective", f.objective, "within, across, threshold-within, threshold-across, aggregate");
  cmd->add_option("--kappa", f.kappa, "threshold for threshold objectives");
}

void add_solve_flags(CLI::App* cmd, Flags& f) {
  add_scenario_flags(cmd, f);
  cmd->add_option("--model", f.model, "disaggregated model file (fit from data when absent)");
  cmd->add_option("--aggregate-model", f.aggregate_model, "aggregate model file (fit from data when absent)");
  cmd->add_option("--budget", f.budget, "maximum number of interventions");
  cmd->add_option("--solver", f.solver, "enumerate, bnb or local");
  cmd->add_option("--seed", f.seed, "local search seed");
  cmd->add_option("--mode", f.mode, "IR or DIP");
  cmd->add_option("--tau", f.tau, "counterfactual privilege bound");
  cmd->add_option("--eta", f.eta, "no-harm tolerance");
  cmd->add_option("--threads", f.threads, "enumeration worker threads");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Budgeted interventions that reduce between-group disparity", "remediate");
  app.require_subcommand(1);
  Flags f;
  auto* validate = app.add_subcommand("validate", "load and check a scenario");
  add_scenario_flags(validate, f);
  validate->add_option("--model", f.model, "model file to check against the scenario");
  auto* fit_cmd = app.add_subcommand("fit", "fit disaggregated and aggregate models");
  add_scenario_flags(fit_cmd, f);
  fit_cmd->add_option("--out", f.out, "output directory");
  auto* solve = app.add_subcommand("solve", "choose interventions");
  add_solve_flags(solve, f);
  solve->add_option("--out", f.out, "output directory");
  auto* compare = app.add_subcommand("compare", "IR versus DIP comparison table");
  add_solve_flags(compare, f);
  compare->add_option("--out", f.out, "output directory");
  compare->add_option("--variants", f.variants, "comma list of IR, IR+no-harm, DIP(tau), DIP-unconstrained");
  auto* toy = app.add_subcommand("gen-toy", "write the two-university career fair scenario");
  toy->add_option("--out", f.out, "output directory")->required();
  auto* random = app.add_subcommand("gen-random", "write a seeded random scenario");
  random->add_option("--out", f.out, "output directory")->required();
  random->add_option("--seed", f.seed, "generator seed");
  random->add_option("--m", f.m, "number of sets")->required();
  random->add_option("--r", f.r, "number of groups")->required();
  random->add_option("--neighbor-k", f.neighbor_k, "nearest neighbors per set");
  random->add_option("--noise-sd", f.noise_sd, "outcome noise standard deviation");
  random->add_option("--budget", f.budget, "budget recorded in the generated config");
  auto* milp = app.add_subcommand("export-milp", "write the equivalent MILP in LP format");
  add_solve_flags(milp, f);
  milp->add_option("--out", f.out, "LP file path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kError;
  }

  try {
    const RunConfig cfg = load_config(f);
    if (*validate) return cmd_validate(cfg, out);
    if (*fit_cmd) return cmd_fit(cfg, out);
    if (*solve) return cmd_solve(cfg, out, err);
    if (*compare) return cmd_compare(cfg, out, err);
    if (*toy) return cmd_gen_toy(cfg, out);
    if (*random) return cmd_gen_random(cfg, f, out);
    if (*milp) return cmd_export_milp(cfg, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace remediate::cli
