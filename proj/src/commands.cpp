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

#include "avss/commands.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "avss/activation_store.hpp"
#include "avss/error.hpp"
#include "avss/json_writer.hpp"
#include "avss/report.hpp"

namespace avss {
namespace {

int guarded(std::ostream& err, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const EvaluatorError& e) {
    write_error(err, e.kind(), e.what());
    return kExitEvaluator;
  } catch (const Error& e) {
    write_error(err, e.kind(), e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    write_error(err, "error", e.what());
    return kExitInput;
  }
}

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing_file", std::string("cannot open ") + what + " " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const GlobalOptions& global, std::ostream& out) {
  if (global.out.empty()) {
    out << text;
    out.flush();
    return;
  }
  std::ofstream file(global.out, std::ios::binary | std::ios::trunc);
  if (!file) throw ValidationError("io_error", "cannot open " + global.out + " for writing");
  file << text;
  if (!file) throw ValidationError("io_error", "write failed: " + global.out);
}

bool want_csv(const GlobalOptions& global) {
  if (global.format == "csv") return true;
  if (global.format == "json") return false;
  throw ValidationError("invalid_argument", "unknown format '" + global.format + "'");
}

AnalyzeConfig make_config(const std::string& dump_path, const GlobalOptions& global) {
  AnalyzeConfig config;
  config.dump_path = dump_path;
  config.epsilon_override = global.epsilon;
  config.formula = parse_eavss_formula(global.eavss_formula);
  config.hallucination = global.hallucination;
  if (global.epsilon && !(*global.epsilon >= 0.0)) {
    throw ValidationError("invalid_argument", "--epsilon must be nonnegative");
  }
  return config;
}

}  // namespace

void write_error(std::ostream& err, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  err << j.dump() << "\n";
}

int cmd_analyze(const std::string& dump_path, const GlobalOptions& global, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const AnalyzeConfig config = make_config(dump_path, global);
    const bool csv = want_csv(global);
    const ActivationDump dump = read_dump(dump_path);
    const Analysis analysis = analyze(dump, config);
    const nlohmann::ordered_json report = analysis_report(dump, analysis, config);
    emit(csv ? analysis_csv(report) : write_json(report), global, out);
    if (global.pretty) err << pretty_table(report);
  });
}

int cmd_prune_plan(const std::string& dump_path, const PrunePlanOptions& options,
                   const GlobalOptions& global, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Thresholds t;
    t.prune_fraction = options.fraction;
    t.rank_cutoff = options.top_k;
    t.redundancy = options.threshold_redundancy;
    t.prune = options.threshold_prune;
    t.importance = options.threshold_importance;
    t.hallucination = options.threshold_hallucination;
    const int active = t.prune_fraction.has_value() + t.rank_cutoff.has_value() +
                       t.redundancy.has_value() + t.prune.has_value() +
                       t.importance.has_value() + t.hallucination.has_value();
    if (active != 1) {
      throw ValidationError("conflicting_rules",
                            "give exactly one of --fraction, --top-k, --threshold-<gate>");
    }
    const AnalyzeConfig config = make_config(dump_path, global);
    const bool csv = want_csv(global);
    const ActivationDump dump = read_dump(dump_path);
    const Analysis analysis = analyze(dump, config);

    std::vector<std::uint64_t> params;
    for (const LayerInfo& l : dump.manifest.layers) params.push_back(l.parameter_count);
    const PruningPlan plan = build_pruning_plan(plan_inputs(analysis), params, t);
    const nlohmann::ordered_json report = plan_report(dump, analysis, config, plan);
    emit(csv ? plan_csv(report) : write_json(report), global, out);
  });
}

int cmd_iterative_prune(const std::string& dump_path, const IterativePruneOptions& options,
                        const GlobalOptions& global, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.alpha.has_value() == options.delta_abs.has_value()) {
      throw ValidationError("conflicting_rules", "give exactly one of --alpha, --delta-abs");
    }
    Thresholds t;
    t.alpha = options.alpha;
    t.delta_abs = options.delta_abs;
    t.eps_conv = options.eps_conv;
    t.halt_on_convergence = options.halt_on_convergence;

    const AnalyzeConfig config = make_config(dump_path, global);
    const bool csv = want_csv(global);
    const ActivationDump dump = read_dump(dump_path);
    const Analysis analysis = analyze(dump, config);
    const TableEvaluator evaluator =
        TableEvaluator::from_json(slurp(options.evaluator_path, "evaluator file"));
    const PlanInputs in = plan_inputs(analysis);
    const IterativePruneTrace trace = iterative_prune(in.importance, std::cref(evaluator), t, in.pinned);
    const nlohmann::ordered_json report =
        trace_report(dump, analysis, config, t, options.evaluator_path, trace);
    emit(csv ? trace_csv(report) : write_json(report), global, out);
    err << "removed_count=" << trace.removed.size()
        << " delta_total=" << format_number(trace.delta_total)
        << " final_performance=" << format_number(trace.final_performance) << "\n";
  });
}

int cmd_lrp(const std::string& network_path, const LrpOptions& options,
            const GlobalOptions& global, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const bool csv = want_csv(global);
    LrpRule rule;
    if (options.rule == "epsilon") {
      rule = EpsilonRule{options.epsilon};
    } else if (options.rule == "alphabeta") {
      rule = AlphaBetaRule{options.alpha, options.beta, options.epsilon};
    } else {
      throw ValidationError("invalid_argument", "unknown rule '" + options.rule + "'");
    }
    const DenseNetwork net = DenseNetwork::from_json(slurp(network_path, "network file"));
    const RelevanceMap map = run_lrp(net, rule);
    const nlohmann::ordered_json report = lrp_report(network_path, net, map);
    emit(csv ? lrp_csv(report) : write_json(report), global, out);
    err << "conservation_residual=" << format_number(map.conservation_residual) << "\n";
  });
}

int cmd_plot_data(const std::string& report_path, const std::string& metric,
                  const GlobalOptions& global, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    nlohmann::ordered_json report;
    try {
      report = nlohmann::ordered_json::parse(slurp(report_path, "report"));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("malformed_report", std::string("report: ") + e.what());
    }
    emit(plot_data_csv(report, metric), global, out);
  });
}

}  // namespace avss
