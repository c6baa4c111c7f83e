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

#include "avss/hallucination.hpp"

#include <cmath>

#include "avss/error.hpp"

namespace avss {

std::string to_string(EavssFormula f) { return f == EavssFormula::kMain ? "main" : "appendix"; }

EavssFormula parse_eavss_formula(const std::string& s) {
  if (s == "main") return EavssFormula::kMain;
  if (s == "appendix") return EavssFormula::kAppendix;
  throw ValidationError("invalid_argument", "unknown eavss formula '" + s + "'");
}

HallucinationStats combine_partitions(double var_hall, double var_nonhall, double sparsity_hall,
                                      double sparsity_nonhall) {
  HallucinationStats h;
  h.var_hall = var_hall;
  h.var_nonhall = var_nonhall;
  h.sparsity_hall = sparsity_hall;
  h.sparsity_nonhall = sparsity_nonhall;
  h.hsav = std::fabs(var_hall - var_nonhall);
  h.hss = std::fabs(sparsity_hall - sparsity_nonhall);
  h.hcs = h.hsav * h.hss;
  return h;
}

FlooredRatio propensity(double variance, double sparsity) {
  const double dense = 1.0 - sparsity;
  if (dense < kDenominatorFloor) return {variance / kDenominatorFloor, true};
  return {variance / dense, false};
}

HallucinationStats hallucination_stats(const LayerActivations& layer, double epsilon) {
  const LabelSplit split = split_by_label(layer);
  const MeanVariance hall = layer_mean_variance(std::span<const float>(split.hallucination));
  const MeanVariance nonhall = layer_mean_variance(std::span<const float>(split.non_hallucination));
  HallucinationStats h = combine_partitions(
      hall.variance, nonhall.variance, layer_sparsity(std::span<const float>(split.hallucination), epsilon),
      layer_sparsity(std::span<const float>(split.non_hallucination), epsilon));

  const std::span<const float> all(layer.values);
  const FlooredRatio p = propensity(layer_mean_variance(all).variance, layer_sparsity(all, epsilon));
  h.propensity = p.value;
  h.propensity_floored = p.floored;
  return h;
}

FlooredRatio eavss(double variance, double hsav, double sparsity, double hss) {
  const double num = variance + hsav;
  const double den = sparsity + hss;
  if (den < kDenominatorFloor) return {num / kDenominatorFloor, true};
  return {num / den, false};
}

FlooredRatio eavss_variant(double variance, double sparsity, double propensity) {
  const double num = variance * (1.0 - sparsity);
  if (propensity < kDenominatorFloor) return {num / kDenominatorFloor, true};
  return {num / propensity, false};
}

PropensityTable compute_propensity(const StatsTable& stats) {
  PropensityTable t;
  const std::size_t num_layers = stats.layers.size();
  t.propensity.resize(num_layers);
  t.floored.resize(num_layers);
  double sum = 0.0;
  for (std::size_t i = 0; i < num_layers; ++i) {
    const FlooredRatio p = propensity(stats.layers[i].variance, stats.layers[i].sparsity);
    t.propensity[i] = p.value;
    t.floored[i] = p.floored;
    sum += p.value;
  }
  t.rate = num_layers == 0 ? 0.0 : sum / static_cast<double>(num_layers);
  return t;
}

HallucinationTable compute_hallucination_table(const ActivationDump& dump, const StatsTable& stats,
                                               double epsilon, EavssFormula formula) {
  if (!dump.manifest.labels_present) {
    throw ValidationError(dump_error::kLabelsAbsent, "labels absent");
  }
  const std::size_t num_layers = dump.layers.size();
  HallucinationTable table;
  table.layers.resize(num_layers);

  const PropensityTable props = compute_propensity(stats);
  table.propensity = props.propensity;
  table.propensity_floored = props.floored;

  EavssScores& sc = table.scores;
  sc.formula = formula;
  sc.eavss.assign(num_layers, 0.0);
  sc.eavss_floored.assign(num_layers, false);
  sc.eavss_variant.assign(num_layers, 0.0);
  sc.variant_floored.assign(num_layers, false);
  sc.excluded.assign(num_layers, false);
  sc.hallucination_rate = props.rate;

  std::vector<double> included_scores;
  for (std::size_t i = 0; i < num_layers; ++i) {
    try {
      table.layers[i] = hallucination_stats(dump.layers[i], epsilon);
    } catch (const ValidationError& e) {
      if (e.kind() != dump_error::kDegenerateSplit) throw;
      sc.excluded[i] = true;
      table.warnings.push_back(e.what());
      continue;
    }
    const HallucinationStats& h = *table.layers[i];
    const LayerStats& s = stats.layers[i];
    const FlooredRatio main = eavss(s.variance, h.hsav, s.sparsity, h.hss);
    const FlooredRatio variant = eavss_variant(s.variance, s.sparsity, h.propensity);
    sc.eavss[i] = main.value;
    sc.eavss_floored[i] = main.floored;
    sc.eavss_variant[i] = variant.value;
    sc.variant_floored[i] = variant.floored;
    included_scores.push_back(formula == EavssFormula::kMain ? main.value : variant.value);
  }
  if (included_scores.empty()) {
    throw ValidationError(dump_error::kDegenerateSplit,
                          "every layer has a degenerate label split; no hallucination metrics");
  }

  const std::vector<double> norm = normalize_across_layers(included_scores);
  sc.norm_eavss.assign(num_layers, 0.0);
  for (std::size_t i = 0, k = 0; i < num_layers; ++i) {
    if (!sc.excluded[i]) sc.norm_eavss[i] = norm[k++];
  }
  sc.cum_eavss = cumulative(sc.norm_eavss);
  return table;
}

}  // namespace avss
