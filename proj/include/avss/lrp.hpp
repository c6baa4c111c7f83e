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

// Layer-wise relevance propagation for small dense feed-forward networks.
//
// Layer 0 is the input x; layer L is the output f(x). Junction l maps layer l
// to layer l + 1 with a widths[l] x widths[l+1] weight matrix (row-major, row
// = source neuron). Hidden layers apply the network's nonlinearity; the output
// layer is linear. There are no bias terms.

#ifndef AVSS_LRP_HPP_
#define AVSS_LRP_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace avss {

enum class Nonlinearity { kIdentity, kRelu };

std::string to_string(Nonlinearity n);

class DenseNetwork {
 public:
  // Validates dimensions and runs the forward pass on `input`.
  DenseNetwork(std::vector<std::size_t> widths, Nonlinearity nonlinearity,
               std::vector<std::vector<double>> weights, std::vector<double> input);

  // Parses {"widths", "nonlinearity", "weights", "input"}.
  static DenseNetwork from_json(const std::string& text);

  std::size_t num_layers() const { return widths_.size(); }
  std::size_t num_junctions() const { return weights_.size(); }
  std::size_t width(std::size_t layer) const { return widths_[layer]; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  Nonlinearity nonlinearity() const { return nonlinearity_; }

  double weight(std::size_t junction, std::size_t from, std::size_t to) const {
    return weights_[junction][from * widths_[junction + 1] + to];
  }
  const std::vector<double>& junction_weights(std::size_t junction) const {
    return weights_[junction];
  }
  const std::vector<double>& activations(std::size_t layer) const { return activations_[layer]; }
  const std::vector<double>& output() const { return activations_.back(); }

  // Checks the stored activations against a fresh forward pass (1e-6).
  void validate() const;

 private:
  std::vector<std::vector<double>> forward() const;

  std::vector<std::size_t> widths_;
  Nonlinearity nonlinearity_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> activations_;
};

struct EpsilonRule {
  double epsilon = 1e-9;
};

struct AlphaBetaRule {
  double alpha = 1.0;
  double beta = 0.0;
  // Stabilizer for the input-layer step, which always uses the epsilon form.
  double input_epsilon = 1e-9;
};

using LrpRule = std::variant<EpsilonRule, AlphaBetaRule>;

struct RelevanceMap {
  // relevance[l] has one entry per neuron of layer l; relevance[0] is the
  // input attribution, relevance.back() equals f(x).
  std::vector<std::vector<double>> relevance;
  LrpRule rule;
  double conservation_residual = 0.0;  // |sum R(input) - sum R(output)|
};

// R(output) = f(x).
std::vector<double> init_relevance(const DenseNetwork& net);

// Epsilon rule across junction `layer` (layer -> layer + 1). The stabilizer
// takes the sign of the denominator (+ for a zero denominator).
std::vector<double> propagate_epsilon(const DenseNetwork& net, std::span<const double> r_next,
                                      std::size_t layer, double epsilon);

// Alpha-beta rule across junction `layer`. Contributions z = a * w are split
// into max(z, 0) and min(z, 0); a term whose denominator is exactly zero is
// dropped. Requires alpha - beta == 1.
std::vector<double> propagate_alphabeta(const DenseNetwork& net, std::span<const double> r_next,
                                        std::size_t layer, double alpha, double beta);

// Input-feature relevance from the first hidden layer's relevance, using x
// and the first junction with the same stabilized form as the epsilon rule.
std::vector<double> input_relevance(const DenseNetwork& net, std::span<const double> r_layer2,
                                    double epsilon = 1e-9);

// Full backward pass from output to input.
RelevanceMap run_lrp(const DenseNetwork& net, const LrpRule& rule);

}  // namespace avss

#endif  // AVSS_LRP_HPP_
