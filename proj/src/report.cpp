// Copyright 2026 The avss Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "avss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "avss/error.hpp"
#include "avss/json_writer.hpp"

namespace avss {
using nlohmann::ordered_json;

namespace {

ordered_json tool_echo() {
  ordered_json t;
  t["name"] = kToolName;
  t["version"] = kToolVersion;
  return t;
}

ordered_json config_echo(const std::string& command, const AnalyzeConfig& config,
                         const Analysis& analysis) {
  ordered_json c;
  c["command"] = command;
  c["dump"] = config.dump_path;
  c["epsilon"] = analysis.epsilon;
  c["epsilon_source"] = analysis.epsilon_source;
  c["hallucination"] = config.hallucination;
  c["eavss_formula"] = to_string(config.formula);
  return c;
}

ordered_json manifest_echo(const ModelManifest& m) {
  ordered_json j;
  j["model_name"] = m.model_name;
  j["num_layers"] = m.num_layers();
  if (m.epsilon_from_manifest) {
    j["epsilon"] = m.epsilon;
  } else {
    j["epsilon"] = nullptr;
  }
  j["reduction"] = to_string(m.reduction);
  j["labels_present"] = m.labels_present;
  ordered_json layers = ordered_json::array();
  for (const LayerInfo& l : m.layers) {
    ordered_json row;
    row["id"] = l.id;
    row["num_samples"] = l.num_samples;
    row["values_per_sample"] = l.values_per_sample;
    row["parameter_count"] = l.parameter_count;
    layers.push_back(std::move(row));
  }
  j["layers"] = std::move(layers);
  return j;
}

ordered_json index_array(const std::vector<std::size_t>& v) {
  ordered_json a = ordered_json::array();
  for (std::size_t x : v) a.push_back(x);
  return a;
}

ordered_json number_array(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::string csv_cell(const ordered_json& v) {
  switch (v.type()) {
    case nlohmann::json::value_t::null:
      return "";
    case nlohmann::json::value_t::number_float:
      return std::isfinite(v.get<double>()) ? format_number(v.get<double>()) : "";
    case nlohmann::json::value_t::string: {
      const std::string s = v.get<std::string>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) {
        if (c == '"') q += '"';
        q += c;
      }
      return q + "\"";
    }
    case nlohmann::json::value_t::array: {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) joined += ';';
        joined += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
      }
      return csv_cell(ordered_json(joined));
    }
    default:
      return v.dump();
  }
}

const ordered_json& require_layers(const ordered_json& report) {
  if (!report.is_object() || !report.contains("layers") || !report["layers"].is_array()) {
    throw ValidationError("malformed_report", "report has no per-layer rows");
  }
  return report["layers"];
}

}  // namespace

Analysis analyze(const ActivationDump& dump, const AnalyzeConfig& config) {
  Analysis a;
  if (config.epsilon_override) {
    a.epsilon = *config.epsilon_override;
    a.epsilon_source = "override";
  } else {
    a.epsilon = dump.manifest.epsilon;
    a.epsilon_source = dump.manifest.epsilon_from_manifest ? "manifest" : "default";
  }
  a.stats = compute_layer_stats(dump, a.epsilon);
  a.propensity = compute_propensity(a.stats);
  if (config.hallucination) {
    a.hallucination = compute_hallucination_table(dump, a.stats, a.epsilon, config.formula);
  }
  return a;
}

std::vector<std::vector<std::string>> layer_flags(const Analysis& a) {
  const std::size_t num_layers = a.stats.layers.size();
  std::vector<std::vector<std::string>> flags(num_layers);
  for (std::size_t i = 0; i < num_layers; ++i) {
    if (a.stats.scores.floored[i]) flags[i].push_back("avss_floored");
    if (a.propensity.floored[i]) flags[i].push_back("propensity_floored");
    if (a.hallucination) {
      const EavssScores& sc = a.hallucination->scores;
      if (sc.excluded[i]) {
        flags[i].push_back("degenerate_split");
        continue;
      }
      if (sc.eavss_floored[i]) flags[i].push_back("eavss_floored");
      if (sc.variant_floored[i]) flags[i].push_back("eavss_variant_floored");
    }
  }
  return flags;
}

std::string importance_name(const Analysis& a) {
  if (!a.hallucination) return "avss";
  return a.hallucination->scores.formula == EavssFormula::kMain ? "eavss" : "eavss_variant";
}

PlanInputs plan_inputs(const Analysis& a) {
  PlanInputs in;
  in.avss = a.stats.scores.avss;
  in.propensity = a.propensity.propensity;
  in.flags = layer_flags(a);
  if (!a.hallucination) {
    in.importance = a.stats.scores.avss;
    in.pinned = a.stats.scores.floored;
    return in;
  }
  const EavssScores& sc = a.hallucination->scores;
  const bool main = sc.formula == EavssFormula::kMain;
  in.importance = main ? sc.eavss : sc.eavss_variant;
  in.pinned.resize(in.importance.size());
  for (std::size_t i = 0; i < in.importance.size(); ++i) {
    in.pinned[i] = sc.excluded[i] || (main ? sc.eavss_floored[i] : sc.variant_floored[i]);
  }
  return in;
}

ordered_json analysis_report(const ActivationDump& dump, const Analysis& a,
                             const AnalyzeConfig& config) {
  ordered_json report;
  report["tool"] = tool_echo();
  report["config"] = config_echo("analyze", config, a);
  report["manifest"] = manifest_echo(dump.manifest);

  const auto flags = layer_flags(a);
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < a.stats.layers.size(); ++i) {
    const LayerStats& s = a.stats.layers[i];
    ordered_json row;
    row["layer"] = i;
    row["id"] = dump.manifest.layers[i].id;
    row["mean"] = s.mean;
    row["variance"] = s.variance;
    row["std"] = s.stddev;
    row["norm_variance"] = s.norm_variance;
    row["sparsity"] = s.sparsity;
    row["norm_sparsity"] = s.norm_sparsity;
    row["sparsity_deviation"] = s.sparsity_deviation;
    row["avss"] = a.stats.scores.avss[i];
    row["norm_avss"] = a.stats.scores.norm_avss[i];
    row["cum_avss"] = a.stats.scores.cum_avss[i];
    row["propensity"] = a.propensity.propensity[i];
    if (a.hallucination) {
      const auto& h = a.hallucination->layers[i];
      const EavssScores& sc = a.hallucination->scores;
      auto put = [&](const char* key, double v) {
        if (h) {
          row[key] = v;
        } else {
          row[key] = nullptr;
        }
      };
      put("var_hall", h ? h->var_hall : 0.0);
      put("var_nonhall", h ? h->var_nonhall : 0.0);
      put("sparsity_hall", h ? h->sparsity_hall : 0.0);
      put("sparsity_nonhall", h ? h->sparsity_nonhall : 0.0);
      put("hsav", h ? h->hsav : 0.0);
      put("hss", h ? h->hss : 0.0);
      put("hcs", h ? h->hcs : 0.0);
      put("eavss", sc.eavss[i]);
      put("eavss_variant", sc.eavss_variant[i]);
      put("norm_eavss", sc.norm_eavss[i]);
      row["cum_eavss"] = sc.cum_eavss[i];
    }
    ordered_json f = ordered_json::array();
    for (const auto& name : flags[i]) f.push_back(name);
    row["flags"] = std::move(f);
    rows.push_back(std::move(row));
  }
  report["layers"] = std::move(rows);

  ordered_json model;
  const double total_avss =
      std::accumulate(a.stats.scores.avss.begin(), a.stats.scores.avss.end(), 0.0);
  std::uint64_t total_params = 0;
  for (const LayerInfo& l : dump.manifest.layers) total_params += l.parameter_count;
  model["total_avss"] = total_avss;
  model["total_parameters"] = total_params;
  if (total_params > 0) {
    model["efficiency_ratio"] = total_avss / static_cast<double>(total_params);
  } else {
    model["efficiency_ratio"] = nullptr;
  }
  model["hallucination_rate"] = a.propensity.rate;
  if (a.hallucination) model["eavss_formula"] = to_string(a.hallucination->scores.formula);
  report["model"] = std::move(model);

  ordered_json warnings = ordered_json::array();
  if (!dump.manifest.epsilon_from_manifest && !config.epsilon_override) {
    warnings.push_back("manifest has no epsilon; default " + format_number(kDefaultEpsilon) +
                       " used");
  }
  if (a.hallucination) {
    for (const auto& w : a.hallucination->warnings) warnings.push_back(w);
  }
  report["warnings"] = std::move(warnings);
  return report;
}

ordered_json plan_report(const ActivationDump& dump, const Analysis& a,
                         const AnalyzeConfig& config, const PruningPlan& plan) {
  const PlanInputs in = plan_inputs(a);
  ordered_json report;
  report["tool"] = tool_echo();
  report["config"] = config_echo("prune-plan", config, a);
  report["manifest"] = manifest_echo(dump.manifest);

  ordered_json p;
  p["num_layers"] = plan.num_layers;
  p["score"] = importance_name(a);
  ordered_json rule;
  rule["rule"] = plan.selection_rule;
  rule["value"] = plan.selection_value;
  p["selection_rule"] = std::move(rule);
  p["tie_break"] = "equal scores rank the lower layer index higher";
  p["pinned_rule"] = "layers with a floored score denominator or a degenerate label split rank "
                     "first and are never pruned";
  p["ranking"] = index_array(plan.ranking);
  p["prune_set"] = index_array(plan.prune_set);
  p["removed_count"] = plan.removed_count;
  p["retained_count"] = plan.num_layers - plan.removed_count;
  p["scores"] = number_array(in.importance);
  p["redundancy"] = number_array(plan.redundancy);
  p["efficiency_ratio"] = plan.efficiency_ratio;
  ordered_json flags = ordered_json::array();
  for (const auto& f : plan.flags) {
    ordered_json row = ordered_json::array();
    for (const auto& name : f) row.push_back(name);
    flags.push_back(std::move(row));
  }
  p["flags"] = std::move(flags);

  std::vector<std::size_t> retained;
  for (std::size_t i = 0, k = 0; i < plan.num_layers; ++i) {
    if (k < plan.prune_set.size() && plan.prune_set[k] == i) {
      ++k;
    } else {
      retained.push_back(i);
    }
  }
  if (!retained.empty()) {
    const HallucinationRateDelta d = hallucination_rate_delta(a.propensity.propensity, retained);
    ordered_json hd;
    hd["rate_pre"] = d.rate_pre;
    hd["rate_post"] = d.rate_post;
    hd["delta"] = d.delta;
    hd["propensity_sum_delta"] = d.propensity_sum_delta;
    p["hallucination_rate"] = std::move(hd);
  } else {
    p["hallucination_rate"] = nullptr;
  }
  report["plan"] = std::move(p);
  return report;
}

ordered_json trace_report(const ActivationDump& dump, const Analysis& a,
                          const AnalyzeConfig& config, const Thresholds& t,
                          const std::string& evaluator_path, const IterativePruneTrace& trace) {
  ordered_json report;
  report["tool"] = tool_echo();
  ordered_json c = config_echo("iterative-prune", config, a);
  c["evaluator"] = evaluator_path;
  if (t.alpha) {
    c["alpha"] = *t.alpha;
  } else {
    c["alpha"] = nullptr;
  }
  if (t.delta_abs) {
    c["delta_abs"] = *t.delta_abs;
  } else {
    c["delta_abs"] = nullptr;
  }
  c["eps_conv"] = t.eps_conv;
  c["halt_on_convergence"] = t.halt_on_convergence;
  report["config"] = std::move(c);
  report["manifest"] = manifest_echo(dump.manifest);

  ordered_json tr;
  tr["score"] = importance_name(a);
  tr["initial_performance"] = trace.initial_performance;
  tr["tolerance"] = trace.tolerance;
  ordered_json steps = ordered_json::array();
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const PruneStep& s = trace.steps[k];
    ordered_json row;
    row["step"] = k;
    row["layer"] = s.layer;
    row["performance_before"] = s.performance_before;
    row["performance_after"] = s.performance_after;
    row["delta"] = s.delta;
    row["accepted"] = s.accepted;
    steps.push_back(std::move(row));
  }
  tr["steps"] = std::move(steps);
  tr["final_performance"] = trace.final_performance;
  tr["delta_total"] = trace.delta_total;
  tr["converged"] = trace.converged;
  tr["stop_reason"] = trace.stop_reason;
  tr["removed"] = index_array(trace.removed);
  tr["retained"] = index_array(trace.retained);
  tr["removed_count"] = trace.removed.size();
  report["trace"] = std::move(tr);
  return report;
}

ordered_json lrp_report(const std::string& network_path, const DenseNetwork& net,
                        const RelevanceMap& map) {
  ordered_json report;
  report["tool"] = tool_echo();
  ordered_json c;
  c["command"] = "lrp";
  c["network"] = network_path;
  if (const auto* eps = std::get_if<EpsilonRule>(&map.rule)) {
    c["rule"] = "epsilon";
    c["epsilon"] = eps->epsilon;
  } else {
    const auto& ab = std::get<AlphaBetaRule>(map.rule);
    c["rule"] = "alphabeta";
    c["alpha"] = ab.alpha;
    c["beta"] = ab.beta;
    c["input_epsilon"] = ab.input_epsilon;
  }
  report["config"] = std::move(c);

  ordered_json n;
  n["widths"] = index_array(net.widths());
  n["nonlinearity"] = to_string(net.nonlinearity());
  report["network"] = std::move(n);
  report["output"] = number_array(net.output());
  ordered_json rel = ordered_json::array();
  for (const auto& r : map.relevance) rel.push_back(number_array(r));
  report["relevance"] = std::move(rel);
  report["conservation_residual"] = map.conservation_residual;
  return report;
}

std::string analysis_csv(const ordered_json& report) {
  const ordered_json& rows = require_layers(report);
  std::ostringstream out;
  if (rows.empty()) return "";
  bool first = true;
  for (const auto& [key, _] : rows[0].items()) {
    out << (first ? "" : ",") << key;
    first = false;
  }
  out << "\n";
  for (const auto& row : rows) {
    first = true;
    for (const auto& [key, value] : row.items()) {
      out << (first ? "" : ",") << csv_cell(value);
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

std::string plan_csv(const ordered_json& report) {
  const ordered_json& p = report.at("plan");
  const std::size_t num_layers = p.at("num_layers").get<std::size_t>();
  std::vector<std::size_t> rank(num_layers);
  const auto& ranking = p.at("ranking");
  for (std::size_t pos = 0; pos < ranking.size(); ++pos) rank[ranking[pos].get<std::size_t>()] = pos + 1;
  std::vector<bool> pruned(num_layers, false);
  for (const auto& l : p.at("prune_set")) pruned[l.get<std::size_t>()] = true;

  std::ostringstream out;
  out << "layer,rank,score,redundancy,pruned\n";
  for (std::size_t i = 0; i < num_layers; ++i) {
    out << i << "," << rank[i] << "," << csv_cell(p.at("scores")[i]) << ","
        << csv_cell(p.at("redundancy")[i]) << "," << (pruned[i] ? "true" : "false") << "\n";
  }
  return out.str();
}

std::string trace_csv(const ordered_json& report) {
  std::ostringstream out;
  out << "step,layer,performance_before,performance_after,delta,accepted\n";
  for (const auto& s : report.at("trace").at("steps")) {
    out << csv_cell(s.at("step")) << "," << csv_cell(s.at("layer")) << ","
        << csv_cell(s.at("performance_before")) << "," << csv_cell(s.at("performance_after"))
        << "," << csv_cell(s.at("delta")) << "," << csv_cell(s.at("accepted")) << "\n";
  }
  return out.str();
}

std::string lrp_csv(const ordered_json& report) {
  std::ostringstream out;
  out << "layer,neuron,relevance\n";
  const auto& rel = report.at("relevance");
  for (std::size_t l = 0; l < rel.size(); ++l) {
    for (std::size_t i = 0; i < rel[l].size(); ++i) {
      out << l << "," << i << "," << csv_cell(rel[l][i]) << "\n";
    }
  }
  return out.str();
}

std::vector<std::string> plot_metrics(const ordered_json& report) {
  const ordered_json& rows = require_layers(report);
  std::vector<std::string> names;
  if (rows.empty()) return names;
  for (const auto& [key, value] : rows[0].items()) {
    if (key == "layer") continue;
    if (value.is_number() || value.is_null()) names.push_back(key);
  }
  return names;
}

std::string plot_data_csv(const ordered_json& report, const std::string& metric) {
  const ordered_json& rows = require_layers(report);
  const std::vector<std::string> names = plot_metrics(report);
  if (std::find(names.begin(), names.end(), metric) == names.end()) {
    std::string list;
    for (std::size_t i = 0; i < names.size(); ++i) list += (i ? ", " : "") + names[i];
    throw ValidationError("unknown_metric",
                          "unknown metric '" + metric + "'; available: " + list);
  }
  std::ostringstream out;
  out << "layer," << metric << "\n";
  for (const auto& row : rows) {
    out << csv_cell(row.at("layer")) << "," << csv_cell(row.at(metric)) << "\n";
  }
  return out.str();
}

std::string pretty_table(const ordered_json& report) {
  const ordered_json& rows = require_layers(report);
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %-16s %14s %10s %14s %10s %10s\n", "layer", "id",
                "variance", "sparsity", "avss", "norm_avss", "cum_avss");
  out << line;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%-6zu %-16.16s %14.6g %10.4f %14.6g %10.4f %10.4f\n",
                  row.at("layer").get<std::size_t>(), row.at("id").get<std::string>().c_str(),
                  row.at("variance").get<double>(), row.at("sparsity").get<double>(),
                  row.at("avss").get<double>(), row.at("norm_avss").get<double>(),
                  row.at("cum_avss").get<double>());
    out << line;
  }
  return out.str();
}

}  // namespace avss
