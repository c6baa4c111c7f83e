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

#include "avss/stats.hpp"

#include <cmath>
#include <string>

#include "avss/error.hpp"

namespace avss {
namespace {

// Neumaier summation; error bound independent of the number of terms.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <typename T>
MeanVariance mean_variance_impl(std::span<const T> values) {
  if (values.empty()) throw ValidationError("empty_sequence", "variance of an empty sequence");
  const double n = static_cast<double>(values.size());
  CompensatedSum total;
  for (T v : values) total.add(static_cast<double>(v));
  const double mean = total.value() / n;

  // Corrected two-pass: the second term removes the residual bias of `mean`.
  CompensatedSum sq;
  CompensatedSum dev;
  for (T v : values) {
    const double d = static_cast<double>(v) - mean;
    sq.add(d * d);
    dev.add(d);
  }
  const double d = dev.value();
  double variance = (sq.value() - d * d / n) / n;
  if (variance < 0.0) variance = 0.0;
  return {mean, variance};
}

template <typename T>
double sparsity_impl(std::span<const T> values, double epsilon) {
  if (values.empty()) throw ValidationError("empty_sequence", "sparsity of an empty sequence");
  std::size_t count = 0;
  for (T v : values) {
    if (std::fabs(static_cast<double>(v)) < epsilon) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(values.size());
}

}  // namespace

MeanVariance layer_mean_variance(std::span<const float> values) {
  return mean_variance_impl(values);
}
MeanVariance layer_mean_variance(std::span<const double> values) {
  return mean_variance_impl(values);
}

double layer_sparsity(std::span<const float> values, double epsilon) {
  return sparsity_impl(values, epsilon);
}
double layer_sparsity(std::span<const double> values, double epsilon) {
  return sparsity_impl(values, epsilon);
}

std::vector<double> normalize_across_layers(std::span<const double> per_layer) {
  CompensatedSum total;
  for (std::size_t i = 0; i < per_layer.size(); ++i) {
    const double v = per_layer[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("negative_entry", "normalize: entry " + std::to_string(i) +
                                                  " is negative or non-finite");
    }
    total.add(v);
  }
  const double sum = total.value();
  std::vector<double> out(per_layer.size());
  if (sum == 0.0) {
    for (double& v : out) v = 1.0 / static_cast<double>(out.size());
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = per_layer[i] / sum;
  return out;
}

std::vector<double> cumulative(std::span<const double> normalized) {
  std::vector<double> out(normalized.size());
  double running = 0.0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    running += normalized[i];
    out[i] = running;
  }
  return out;
}

FlooredRatio avss(double variance, double sparsity) {
  if (sparsity < kDenominatorFloor) return {variance / kDenominatorFloor, true};
  return {variance / sparsity, false};
}

StatsTable compute_layer_stats(const ActivationDump& dump, double epsilon) {
  if (!std::isfinite(epsilon) || epsilon < 0.0) {
    throw ValidationError(dump_error::kValidation, "epsilon must be a finite nonnegative number");
  }
  const std::size_t num_layers = dump.layers.size();
  StatsTable table;
  table.layers.resize(num_layers);
  table.scores.avss.resize(num_layers);
  table.scores.floored.resize(num_layers);

  std::vector<double> variances(num_layers);
  std::vector<double> sparsities(num_layers);
  for (std::size_t i = 0; i < num_layers; ++i) {
    const std::span<const float> values(dump.layers[i].values);
    const MeanVariance mv = layer_mean_variance(values);
    LayerStats& s = table.layers[i];
    s.mean = mv.mean;
    s.variance = mv.variance;
    s.stddev = std::sqrt(mv.variance);
    s.sparsity = layer_sparsity(values, epsilon);
    variances[i] = s.variance;
    sparsities[i] = s.sparsity;

    const FlooredRatio score = avss(s.variance, s.sparsity);
    table.scores.avss[i] = score.value;
    table.scores.floored[i] = score.floored;
  }

  const std::vector<double> norm_var = normalize_across_layers(variances);
  const std::vector<double> norm_sp = normalize_across_layers(sparsities);
  for (std::size_t i = 0; i < num_layers; ++i) {
    LayerStats& s = table.layers[i];
    s.norm_variance = norm_var[i];
    s.norm_sparsity = norm_sp[i];
    s.sparsity_deviation = std::fabs(s.sparsity - s.norm_sparsity);
  }
  table.scores.norm_avss = normalize_across_layers(table.scores.avss);
  table.scores.cum_avss = cumulative(table.scores.norm_avss);
  return table;
}

}  // namespace avss
