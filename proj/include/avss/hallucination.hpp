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

// Hallucination-conditioned layer statistics and the extended score (EAVSS).

#ifndef AVSS_HALLUCINATION_HPP_
#define AVSS_HALLUCINATION_HPP_

#include <optional>
#include <string>
#include <vector>

#include "avss/activation_store.hpp"
#include "avss/stats.hpp"

namespace avss {

// Which EAVSS formula feeds normalization and ranking.
//   kMain:     (var + HSAV) / (S + HSS)
//   kAppendix: var * (1 - S) / propensity
enum class EavssFormula { kMain, kAppendix };

std::string to_string(EavssFormula f);
EavssFormula parse_eavss_formula(const std::string& s);

struct HallucinationStats {
  double var_hall = 0.0;
  double var_nonhall = 0.0;
  double sparsity_hall = 0.0;
  double sparsity_nonhall = 0.0;
  double hsav = 0.0;  // |var_hall - var_nonhall|
  double hss = 0.0;   // |sparsity_hall - sparsity_nonhall|
  double hcs = 0.0;   // hsav * hss
  double propensity = 0.0;
  bool propensity_floored = false;
};

// Combines the two partitions' statistics into HSAV, HSS and HCS.
HallucinationStats combine_partitions(double var_hall, double var_nonhall, double sparsity_hall,
                                      double sparsity_nonhall);

// var / (1 - S), with 1 - S floored at kDenominatorFloor.
FlooredRatio propensity(double variance, double sparsity);

// Statistics for one labeled layer. Propensity uses the whole layer.
// Throws on a missing mask or a degenerate split.
HallucinationStats hallucination_stats(const LayerActivations& layer, double epsilon);

// (var + hsav) / (sparsity + hss), denominator floored at kDenominatorFloor.
FlooredRatio eavss(double variance, double hsav, double sparsity, double hss);

// variance * (1 - sparsity) / propensity, propensity floored at
// kDenominatorFloor.
FlooredRatio eavss_variant(double variance, double sparsity, double propensity);

struct EavssScores {
  EavssFormula formula = EavssFormula::kMain;
  std::vector<double> eavss;
  std::vector<bool> eavss_floored;
  std::vector<double> eavss_variant;
  std::vector<bool> variant_floored;
  // Normalized and cumulative forms of the selected formula. Excluded layers
  // contribute zero to both.
  std::vector<double> norm_eavss;
  std::vector<double> cum_eavss;
  // Layers whose label split was degenerate; left out of normalization.
  std::vector<bool> excluded;
  double hallucination_rate = 0.0;  // mean propensity over all layers
};

struct HallucinationTable {
  // Empty for excluded layers.
  std::vector<std::optional<HallucinationStats>> layers;
  // Whole-layer propensity, defined for every layer.
  std::vector<double> propensity;
  std::vector<bool> propensity_floored;
  EavssScores scores;
  std::vector<std::string> warnings;
};

// Per-layer propensity and the model-level mean. Needs no labels.
struct PropensityTable {
  std::vector<double> propensity;
  std::vector<bool> floored;
  double rate = 0.0;
};
PropensityTable compute_propensity(const StatsTable& stats);

// Full hallucination table. Requires labels. Layers with a degenerate split
// are excluded and reported in `warnings`; if every layer is degenerate the
// call throws.
HallucinationTable compute_hallucination_table(const ActivationDump& dump, const StatsTable& stats,
                                               double epsilon,
                                               EavssFormula formula = EavssFormula::kMain);

inline HallucinationTable compute_hallucination_table(const ActivationDump& dump) {
  return compute_hallucination_table(dump, compute_layer_stats(dump), dump.manifest.epsilon);
}

}  // namespace avss

#endif  // AVSS_HALLUCINATION_HPP_
