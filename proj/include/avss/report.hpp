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

// Report assembly: analysis tables, pruning plans, iterative traces and
// relevance maps as JSON, with CSV views derived from the JSON.

#ifndef AVSS_REPORT_HPP_
#define AVSS_REPORT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "avss/activation_store.hpp"
#include "avss/hallucination.hpp"
#include "avss/lrp.hpp"
#include "avss/prune.hpp"
#include "avss/stats.hpp"
#include "json.hpp"

namespace avss {

inline constexpr const char* kToolName = "avss";
inline constexpr const char* kToolVersion = "0.1.0";

struct AnalyzeConfig {
  std::string dump_path;
  std::optional<double> epsilon_override;
  EavssFormula formula = EavssFormula::kMain;
  bool hallucination = false;
};

struct Analysis {
  double epsilon = kDefaultEpsilon;
  std::string epsilon_source;  // "override", "manifest" or "default"
  StatsTable stats;
  PropensityTable propensity;
  std::optional<HallucinationTable> hallucination;
};

Analysis analyze(const ActivationDump& dump, const AnalyzeConfig& config);

// Per-layer flag names ("avss_floored", "propensity_floored", ...).
std::vector<std::vector<std::string>> layer_flags(const Analysis& analysis);

// Ranking inputs for a plan: AVSS by default, the selected EAVSS formula when
// hallucination metrics are on. Layers whose score denominator was floored or
// whose label split was degenerate are pinned.
PlanInputs plan_inputs(const Analysis& analysis);
std::string importance_name(const Analysis& analysis);

nlohmann::ordered_json analysis_report(const ActivationDump& dump, const Analysis& analysis,
                                       const AnalyzeConfig& config);

nlohmann::ordered_json plan_report(const ActivationDump& dump, const Analysis& analysis,
                                   const AnalyzeConfig& config, const PruningPlan& plan);

nlohmann::ordered_json trace_report(const ActivationDump& dump, const Analysis& analysis,
                                    const AnalyzeConfig& config, const Thresholds& thresholds,
                                    const std::string& evaluator_path,
                                    const IterativePruneTrace& trace);

nlohmann::ordered_json lrp_report(const std::string& network_path, const DenseNetwork& net,
                                  const RelevanceMap& map);

// CSV views. Numbers are formatted exactly as in the JSON report.
std::string analysis_csv(const nlohmann::ordered_json& report);
std::string plan_csv(const nlohmann::ordered_json& report);
std::string trace_csv(const nlohmann::ordered_json& report);
std::string lrp_csv(const nlohmann::ordered_json& report);

// Two-column (layer, value) series for one per-layer metric of an analysis
// report. Unknown metrics raise ValidationError listing the valid names.
std::string plot_data_csv(const nlohmann::ordered_json& report, const std::string& metric);
std::vector<std::string> plot_metrics(const nlohmann::ordered_json& report);

// Human-readable table for --pretty.
std::string pretty_table(const nlohmann::ordered_json& report);

}  // namespace avss

#endif  // AVSS_REPORT_HPP_
