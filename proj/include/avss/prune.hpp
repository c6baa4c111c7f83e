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

// Layer ranking, prune-set selection and the iterative pruning loop.

#ifndef AVSS_PRUNE_HPP_
#define AVSS_PRUNE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace avss {

// Indices sorted by descending score; equal scores keep the lower index first.
// Throws ValidationError on NaN.
std::vector<std::size_t> rank_layers(std::span<const double> scores);

// As above, but `pinned` layers are placed ahead of every unpinned layer
// (in index order). Pinned layers are those whose score denominator was
// floored or whose label split was degenerate.
std::vector<std::size_t> rank_layers(std::span<const double> scores,
                                     const std::vector<bool>& pinned);

struct RedundancyResult {
  std::vector<double> redundancy;  // share of total AVSS, uniform on zero total
  double efficiency_ratio = 0.0;   // total AVSS / total parameters
};

RedundancyResult redundancy_and_efficiency(std::span<const double> avss,
                                           std::span<const std::uint64_t> parameter_counts);

struct Thresholds {
  // Selection rules; exactly one must be set for select_prune_set.
  std::optional<double> redundancy;     // prune if redundancy < value
  std::optional<double> prune;          // prune if importance < value
  std::optional<double> importance;     // prune if importance < value
  std::optional<double> hallucination;  // prune if propensity > value
  std::optional<std::size_t> rank_cutoff;
  std::optional<double> prune_fraction;

  // Iterative loop. The per-step tolerance is delta_abs when set, otherwise
  // alpha * initial performance.
  std::optional<double> alpha;
  std::optional<double> delta_abs;
  double eps_conv = 1e-6;
  // Stop as soon as an accepted step changes performance by less than
  // eps_conv. Off by default: the loop runs until every candidate was tried.
  bool halt_on_convergence = false;
};

struct PlanInputs {
  std::vector<double> importance;  // ranking score per layer
  std::vector<double> avss;        // feeds redundancy and efficiency
  std::vector<double> propensity;  // needed only by the hallucination gate
  std::vector<bool> pinned;        // never selected for pruning
  std::vector<std::vector<std::string>> flags;
};

struct Selection {
  std::vector<std::size_t> layers;  // ascending
  std::string rule;
  double value = 0.0;
};

// Applies the single active selection rule. Pinned layers are never selected.
Selection select_prune_set(const PlanInputs& in, const Thresholds& thresholds);

struct PruningPlan {
  std::vector<std::size_t> ranking;
  std::vector<double> redundancy;
  double efficiency_ratio = 0.0;
  std::vector<std::size_t> prune_set;
  std::vector<std::vector<std::string>> flags;
  std::string selection_rule;
  double selection_value = 0.0;
  std::size_t removed_count = 0;
  std::size_t num_layers = 0;
};

PruningPlan build_pruning_plan(const PlanInputs& in,
                               std::span<const std::uint64_t> parameter_counts,
                               const Thresholds& thresholds);

// Returns model performance in [0, 1] for a retained layer set (ascending
// indices). Must be deterministic within a run.
using PerformanceEvaluator = std::function<double(std::span<const std::size_t>)>;

// Evaluator backed by a JSON object mapping the comma-joined retained set
// ("0,2,3"; "" for the empty set) to a performance value.
class TableEvaluator {
 public:
  static TableEvaluator from_json(const std::string& text);

  double operator()(std::span<const std::size_t> retained) const;

  static std::string key(std::span<const std::size_t> retained);
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, double> table_;
};

struct PruneStep {
  std::size_t layer = 0;
  double performance_before = 0.0;
  double performance_after = 0.0;
  double delta = 0.0;  // before - after
  bool accepted = false;
};

struct IterativePruneTrace {
  double initial_performance = 0.0;
  double tolerance = 0.0;  // delta used by the acceptance gate
  std::vector<PruneStep> steps;
  double final_performance = 0.0;
  double delta_total = 0.0;
  bool converged = false;
  std::string stop_reason;
  std::vector<std::size_t> removed;   // in pruning order
  std::vector<std::size_t> retained;  // ascending
  std::size_t num_layers = 0;
};

// Greedy loop: repeatedly try to remove the lowest-importance candidate and
// keep the removal iff performance_after >= performance_before - tolerance.
// A rejected layer is retained for good and leaves the candidate pool.
IterativePruneTrace iterative_prune(std::span<const double> importance,
                                    const PerformanceEvaluator& evaluator,
                                    const Thresholds& thresholds,
                                    const std::vector<bool>& pinned = {});

struct HallucinationRateDelta {
  double rate_pre = 0.0;
  double rate_post = 0.0;
  double delta = 0.0;          // rate_pre - rate_post
  double propensity_sum_delta = 0.0;  // sum over all layers - sum over retained
};

HallucinationRateDelta hallucination_rate_delta(std::span<const double> propensity,
                                                std::span<const std::size_t> retained);

}  // namespace avss

#endif  // AVSS_PRUNE_HPP_
