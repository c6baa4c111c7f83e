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

// Per-layer activation statistics and the activation variance-sparsity score.

#ifndef AVSS_STATS_HPP_
#define AVSS_STATS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "avss/activation_store.hpp"

namespace avss {

// Smallest denominator used by score ratios. Anything below is replaced by
// this value and the result is flagged.
inline constexpr double kDenominatorFloor = 1e-9;

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;  // population (1/N) variance
};

// Compensated two-pass mean and population variance. Throws ValidationError on
// an empty sequence.
MeanVariance layer_mean_variance(std::span<const float> values);
MeanVariance layer_mean_variance(std::span<const double> values);

// Fraction of values with |a| < epsilon (strict).
double layer_sparsity(std::span<const float> values, double epsilon);
double layer_sparsity(std::span<const double> values, double epsilon);

// Divides every entry by the total. A zero total yields the uniform vector.
// Throws ValidationError on negative or non-finite entries.
std::vector<double> normalize_across_layers(std::span<const double> per_layer);

// Running sum in layer order.
std::vector<double> cumulative(std::span<const double> normalized);

struct FlooredRatio {
  double value = 0.0;
  bool floored = false;  // denominator was below kDenominatorFloor
};

// variance / sparsity, with sparsity floored at kDenominatorFloor.
FlooredRatio avss(double variance, double sparsity);

struct LayerStats {
  double mean = 0.0;
  double variance = 0.0;
  double stddev = 0.0;
  double norm_variance = 0.0;
  double sparsity = 0.0;
  double norm_sparsity = 0.0;
  double sparsity_deviation = 0.0;  // |S - normalized S|
};

struct AvssScores {
  std::vector<double> avss;
  std::vector<double> norm_avss;
  std::vector<double> cum_avss;
  std::vector<bool> floored;
};

struct StatsTable {
  std::vector<LayerStats> layers;
  AvssScores scores;
};

// Full statistics table for every layer of a dump, using `epsilon` as the
// sparsity threshold.
StatsTable compute_layer_stats(const ActivationDump& dump, double epsilon);

// Same, with the manifest's epsilon.
inline StatsTable compute_layer_stats(const ActivationDump& dump) {
  return compute_layer_stats(dump, dump.manifest.epsilon);
}

}  // namespace avss

#endif  // AVSS_STATS_HPP_
