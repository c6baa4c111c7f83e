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

#include "avss/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avss/error.hpp"
#include "avss/stats.hpp"
#include "json.hpp"

namespace avss {
namespace {

[[noreturn]] void invalid(const std::string& msg) {
  throw ValidationError("invalid_argument", msg);
}

void check_scores(std::span<const double> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) invalid("score for layer " + std::to_string(i) + " is NaN");
  }
}

double checked_eval(const PerformanceEvaluator& evaluator, std::span<const std::size_t> retained,
                    const std::string& context) {
  double perf = 0.0;
  try {
    perf = evaluator(retained);
  } catch (const EvaluatorError& e) {
    throw EvaluatorError(e.kind(), context + ": " + e.what());
  }
  if (!std::isfinite(perf) || perf < 0.0 || perf > 1.0) {
    throw EvaluatorError("evaluator_out_of_range",
                         context + ": performance " + std::to_string(perf) + " outside [0, 1]");
  }
  return perf;
}

}  // namespace

std::vector<std::size_t> rank_layers(std::span<const double> scores) {
  return rank_layers(scores, {});
}

std::vector<std::size_t> rank_layers(std::span<const double> scores,
                                     const std::vector<bool>& pinned) {
  check_scores(scores);
  if (!pinned.empty() && pinned.size() != scores.size()) {
    invalid("pinned mask length does not match the number of layers");
  }
  auto is_pinned = [&](std::size_t i) { return !pinned.empty() && pinned[i]; };
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (is_pinned(a) != is_pinned(b)) return is_pinned(a);
    if (is_pinned(a)) return false;
    return scores[a] > scores[b];
  });
  return order;
}

RedundancyResult redundancy_and_efficiency(std::span<const double> avss,
                                           std::span<const std::uint64_t> parameter_counts) {
  if (avss.size() != parameter_counts.size()) {
    invalid("avss and parameter_counts differ in length");
  }
  const std::uint64_t total_params =
      std::accumulate(parameter_counts.begin(), parameter_counts.end(), std::uint64_t{0});
  if (total_params == 0) {
    throw ValidationError("zero_parameters", "total parameter count is zero");
  }
  RedundancyResult r;
  r.redundancy = normalize_across_layers(avss);
  const double total_avss = std::accumulate(avss.begin(), avss.end(), 0.0);
  r.efficiency_ratio = total_avss / static_cast<double>(total_params);
  return r;
}

Selection select_prune_set(const PlanInputs& in, const Thresholds& t) {
  const std::size_t num_layers = in.importance.size();
  if (num_layers == 0) throw ValidationError("empty_model", "model has no layers");
  check_scores(in.importance);
  const int active = t.redundancy.has_value() + t.prune.has_value() + t.importance.has_value() +
                     t.hallucination.has_value() + t.rank_cutoff.has_value() +
                     t.prune_fraction.has_value();
  if (active == 0) throw ValidationError("no_selection_rule", "no selection rule given");
  if (active > 1) {
    throw ValidationError("conflicting_rules", "exactly one selection rule may be active");
  }
  if (!in.pinned.empty() && in.pinned.size() != num_layers) {
    invalid("pinned mask length does not match the number of layers");
  }
  auto is_pinned = [&](std::size_t i) { return !in.pinned.empty() && in.pinned[i]; };

  Selection sel;
  auto gate = [&](const std::string& rule, double value, std::span<const double> quantity,
                  bool prune_above) {
    if (quantity.size() != num_layers) invalid(rule + ": per-layer input missing");
    sel.rule = rule;
    sel.value = value;
    for (std::size_t i = 0; i < num_layers; ++i) {
      if (is_pinned(i)) continue;
      const bool crosses = prune_above ? quantity[i] > value : quantity[i] < value;
      if (crosses) sel.layers.push_back(i);
    }
  };

  if (t.prune_fraction) {
    const double f = *t.prune_fraction;
    if (!(f >= 0.0 && f <= 1.0)) invalid("prune fraction must lie in [0, 1]");
    const auto count = static_cast<std::size_t>(std::floor(f * static_cast<double>(num_layers)));
    const std::vector<std::size_t> ranking = rank_layers(in.importance, in.pinned);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t layer = ranking[num_layers - 1 - k];
      if (is_pinned(layer)) break;
      sel.layers.push_back(layer);
    }
    sel.rule = "fraction";
    sel.value = f;
  } else if (t.rank_cutoff) {
    const std::size_t k = *t.rank_cutoff;
    if (k == 0) invalid("rank cutoff K must be positive");
    const std::vector<std::size_t> ranking = rank_layers(in.importance, in.pinned);
    for (std::size_t pos = k; pos < num_layers; ++pos) {
      if (!is_pinned(ranking[pos])) sel.layers.push_back(ranking[pos]);
    }
    sel.rule = "top_k";
    sel.value = static_cast<double>(k);
  } else if (t.redundancy) {
    if (in.avss.size() != num_layers) invalid("redundancy: per-layer AVSS missing");
    const std::vector<double> redundancy = normalize_across_layers(in.avss);
    gate("threshold_redundancy", *t.redundancy, redundancy, false);
  } else if (t.prune) {
    gate("threshold_prune", *t.prune, in.importance, false);
  } else if (t.importance) {
    gate("threshold_importance", *t.importance, in.importance, false);
  } else {
    gate("threshold_hallucination", *t.hallucination, in.propensity, true);
  }
  std::sort(sel.layers.begin(), sel.layers.end());
  return sel;
}

PruningPlan build_pruning_plan(const PlanInputs& in,
                               std::span<const std::uint64_t> parameter_counts,
                               const Thresholds& thresholds) {
  PruningPlan plan;
  const Selection sel = select_prune_set(in, thresholds);
  const RedundancyResult red = redundancy_and_efficiency(in.avss, parameter_counts);
  plan.num_layers = in.importance.size();
  plan.ranking = rank_layers(in.importance, in.pinned);
  plan.redundancy = red.redundancy;
  plan.efficiency_ratio = red.efficiency_ratio;
  plan.prune_set = sel.layers;
  plan.selection_rule = sel.rule;
  plan.selection_value = sel.value;
  plan.removed_count = sel.layers.size();
  plan.flags = in.flags;
  plan.flags.resize(plan.num_layers);
  return plan;
}

TableEvaluator TableEvaluator::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed_evaluator", std::string("evaluator file: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("malformed_evaluator", "evaluator file: not an object");
  TableEvaluator ev;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      throw ValidationError("malformed_evaluator", "evaluator key \"" + key + "\" is not a number");
    }
    ev.table_[key] = value.get<double>();
  }
  return ev;
}

std::string TableEvaluator::key(std::span<const std::size_t> retained) {
  std::string k;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (i) k += ',';
    k += std::to_string(retained[i]);
  }
  return k;
}

double TableEvaluator::operator()(std::span<const std::size_t> retained) const {
  const std::string k = key(retained);
  auto it = table_.find(k);
  if (it == table_.end()) {
    throw EvaluatorError("missing_evaluator_key", "evaluator has no entry for key \"" + k + "\"");
  }
  return it->second;
}

IterativePruneTrace iterative_prune(std::span<const double> importance,
                                    const PerformanceEvaluator& evaluator, const Thresholds& t,
                                    const std::vector<bool>& pinned) {
  const std::size_t num_layers = importance.size();
  check_scores(importance);
  if (!pinned.empty() && pinned.size() != num_layers) {
    invalid("pinned mask length does not match the number of layers");
  }
  if (!t.alpha && !t.delta_abs) invalid("iterative prune needs alpha or an absolute delta");
  if (t.alpha && !(*t.alpha >= 0.0 && *t.alpha <= 1.0)) invalid("alpha must lie in [0, 1]");
  if (t.delta_abs && !(*t.delta_abs >= 0.0)) invalid("absolute delta must be nonnegative");
  if (!(t.eps_conv > 0.0)) invalid("convergence epsilon must be positive");

  IterativePruneTrace trace;
  trace.num_layers = num_layers;
  std::vector<std::size_t> retained(num_layers);
  std::iota(retained.begin(), retained.end(), std::size_t{0});

  trace.initial_performance = checked_eval(evaluator, retained, "initial evaluation");
  trace.tolerance = t.delta_abs ? *t.delta_abs : *t.alpha * trace.initial_performance;

  // argmin over the remaining candidates is the next entry of this order.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < num_layers; ++i) {
    if (pinned.empty() || !pinned[i]) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] < importance[b]; });

  double current = trace.initial_performance;
  double last_change = 0.0;
  trace.stop_reason = "candidates_exhausted";
  for (std::size_t layer : candidates) {
    std::vector<std::size_t> trial;
    trial.reserve(retained.size());
    for (std::size_t r : retained) {
      if (r != layer) trial.push_back(r);
    }
    const double after = checked_eval(
        evaluator, trial,
        "step " + std::to_string(trace.steps.size()) + " (removing layer " + std::to_string(layer) + ")");

    PruneStep step;
    step.layer = layer;
    step.performance_before = current;
    step.performance_after = after;
    step.delta = current - after;
    step.accepted = after >= current - trace.tolerance;
    trace.steps.push_back(step);

    if (!step.accepted) {
      last_change = 0.0;  // model unchanged
      continue;
    }
    retained = std::move(trial);
    trace.removed.push_back(layer);
    last_change = after - current;
    current = after;
    if (t.halt_on_convergence && std::fabs(last_change) < t.eps_conv) {
      trace.stop_reason = "converged";
      break;
    }
  }

  trace.final_performance = current;
  trace.delta_total = trace.initial_performance - trace.final_performance;
  trace.converged = std::fabs(last_change) < t.eps_conv;
  trace.retained = retained;
  return trace;
}

HallucinationRateDelta hallucination_rate_delta(std::span<const double> propensity,
                                                std::span<const std::size_t> retained) {
  const std::size_t num_layers = propensity.size();
  if (num_layers == 0) throw ValidationError("empty_model", "model has no layers");
  if (retained.empty()) throw ValidationError("empty_retained_set", "retained set is empty");
  std::vector<bool> seen(num_layers, false);
  double post_sum = 0.0;
  for (std::size_t l : retained) {
    if (l >= num_layers) invalid("retained layer " + std::to_string(l) + " out of range");
    if (seen[l]) invalid("retained layer " + std::to_string(l) + " listed twice");
    seen[l] = true;
    post_sum += propensity[l];
  }
  const double pre_sum = std::accumulate(propensity.begin(), propensity.end(), 0.0);
  HallucinationRateDelta d;
  d.rate_pre = pre_sum / static_cast<double>(num_layers);
  d.rate_post = post_sum / static_cast<double>(retained.size());
  d.delta = d.rate_pre - d.rate_post;
  d.propensity_sum_delta = pre_sum - post_sum;
  return d;
}

}  // namespace avss
