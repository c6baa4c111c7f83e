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

#include "avss/lrp.hpp"

#include <cmath>
#include <numeric>

#include "avss/error.hpp"
#include "json.hpp"

namespace avss {
namespace {

[[noreturn]] void invalid(const std::string& msg) {
  throw ValidationError("invalid_network", msg);
}

void check_junction(const DenseNetwork& net, std::span<const double> r_next, std::size_t layer) {
  if (layer >= net.num_junctions()) {
    throw ValidationError("width_mismatch", "junction " + std::to_string(layer) + " does not exist");
  }
  if (r_next.size() != net.width(layer + 1)) {
    throw ValidationError("width_mismatch", "relevance vector has " + std::to_string(r_next.size()) +
                                                " entries, layer " + std::to_string(layer + 1) +
                                                " has " + std::to_string(net.width(layer + 1)));
  }
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

std::string to_string(Nonlinearity n) { return n == Nonlinearity::kIdentity ? "identity" : "relu"; }

DenseNetwork::DenseNetwork(std::vector<std::size_t> widths, Nonlinearity nonlinearity,
                           std::vector<std::vector<double>> weights, std::vector<double> input)
    : widths_(std::move(widths)), nonlinearity_(nonlinearity), weights_(std::move(weights)) {
  if (widths_.size() < 2) invalid("a network needs at least an input and an output layer");
  for (std::size_t w : widths_) {
    if (w == 0) invalid("layer widths must be positive");
  }
  if (weights_.size() != widths_.size() - 1) {
    invalid("expected " + std::to_string(widths_.size() - 1) + " weight matrices, got " +
            std::to_string(weights_.size()));
  }
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (weights_[j].size() != widths_[j] * widths_[j + 1]) {
      invalid("junction " + std::to_string(j) + ": expected " +
              std::to_string(widths_[j] * widths_[j + 1]) + " weights, got " +
              std::to_string(weights_[j].size()));
    }
    for (double w : weights_[j]) {
      if (!std::isfinite(w)) invalid("junction " + std::to_string(j) + ": non-finite weight");
    }
  }
  if (input.size() != widths_[0]) invalid("input length does not match widths[0]");
  for (double x : input) {
    if (!std::isfinite(x)) invalid("non-finite input value");
  }
  activations_.push_back(std::move(input));
  activations_ = forward();
}

std::vector<std::vector<double>> DenseNetwork::forward() const {
  std::vector<std::vector<double>> acts{activations_.front()};
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const std::vector<double>& a = acts.back();
    std::vector<double> z(widths_[j + 1], 0.0);
    for (std::size_t i = 0; i < widths_[j]; ++i) {
      for (std::size_t k = 0; k < z.size(); ++k) z[k] += a[i] * weight(j, i, k);
    }
    const bool hidden = j + 1 < weights_.size();
    if (hidden && nonlinearity_ == Nonlinearity::kRelu) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

void DenseNetwork::validate() const {
  const auto fresh = forward();
  for (std::size_t l = 0; l < fresh.size(); ++l) {
    if (activations_[l].size() != fresh[l].size()) invalid("activation shape mismatch");
    for (std::size_t i = 0; i < fresh[l].size(); ++i) {
      if (std::fabs(activations_[l][i] - fresh[l][i]) > 1e-6) {
        invalid("activations of layer " + std::to_string(l) + " disagree with the weights");
      }
    }
  }
}

DenseNetwork DenseNetwork::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    invalid(std::string("network file: ") + e.what());
  }
  if (!j.is_object()) invalid("network file: not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "widths" && key != "nonlinearity" && key != "weights" && key != "input") {
      invalid("network file: unknown key '" + key + "'");
    }
  }
  for (const char* key : {"widths", "nonlinearity", "weights", "input"}) {
    if (!j.contains(key)) invalid(std::string("network file: missing key '") + key + "'");
  }
  try {
    const std::string nl = j.at("nonlinearity").get<std::string>();
    Nonlinearity nonlinearity;
    if (nl == "identity") {
      nonlinearity = Nonlinearity::kIdentity;
    } else if (nl == "relu") {
      nonlinearity = Nonlinearity::kRelu;
    } else {
      invalid("network file: unknown nonlinearity '" + nl + "'");
    }
    return DenseNetwork(j.at("widths").get<std::vector<std::size_t>>(), nonlinearity,
                        j.at("weights").get<std::vector<std::vector<double>>>(),
                        j.at("input").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("network file: ") + e.what());
  }
}

std::vector<double> init_relevance(const DenseNetwork& net) { return net.output(); }

std::vector<double> propagate_epsilon(const DenseNetwork& net, std::span<const double> r_next,
                                      std::size_t layer, double epsilon) {
  check_junction(net, r_next, layer);
  if (!(epsilon > 0.0)) throw ValidationError("invalid_argument", "epsilon must be positive");
  const std::vector<double>& a = net.activations(layer);
  const std::size_t n_out = net.width(layer + 1);

  std::vector<double> scale(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    double z = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) z += a[i] * net.weight(layer, i, j);
    const double den = z + (z >= 0.0 ? epsilon : -epsilon);
    scale[j] = r_next[j] / den;
  }
  std::vector<double> r(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < n_out; ++j) r[i] += a[i] * net.weight(layer, i, j) * scale[j];
  }
  return r;
}

std::vector<double> propagate_alphabeta(const DenseNetwork& net, std::span<const double> r_next,
                                        std::size_t layer, double alpha, double beta) {
  check_junction(net, r_next, layer);
  if (std::fabs(alpha - beta - 1.0) > 1e-12) {
    throw ValidationError("alpha_beta_constraint", "alpha - beta = 1 violated (alpha=" +
                                                       std::to_string(alpha) +
                                                       ", beta=" + std::to_string(beta) + ")");
  }
  const std::vector<double>& a = net.activations(layer);
  const std::size_t n_out = net.width(layer + 1);

  std::vector<double> pos_scale(n_out, 0.0);
  std::vector<double> neg_scale(n_out, 0.0);
  for (std::size_t j = 0; j < n_out; ++j) {
    double pos = 0.0;
    double neg = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double z = a[i] * net.weight(layer, i, j);
      if (z > 0.0) pos += z;
      if (z < 0.0) neg += z;
    }
    if (pos != 0.0) pos_scale[j] = alpha * r_next[j] / pos;
    if (neg != 0.0) neg_scale[j] = beta * r_next[j] / neg;
  }
  std::vector<double> r(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < n_out; ++j) {
      const double z = a[i] * net.weight(layer, i, j);
      if (z > 0.0) r[i] += z * pos_scale[j];
      if (z < 0.0) r[i] -= z * neg_scale[j];
    }
  }
  return r;
}

std::vector<double> input_relevance(const DenseNetwork& net, std::span<const double> r_layer2,
                                    double epsilon) {
  return propagate_epsilon(net, r_layer2, 0, epsilon);
}

RelevanceMap run_lrp(const DenseNetwork& net, const LrpRule& rule) {
  if (const auto* ab = std::get_if<AlphaBetaRule>(&rule);
      ab && std::fabs(ab->alpha - ab->beta - 1.0) > 1e-12) {
    throw ValidationError("alpha_beta_constraint", "alpha - beta = 1 violated (alpha=" +
                                                       std::to_string(ab->alpha) +
                                                       ", beta=" + std::to_string(ab->beta) + ")");
  }
  const std::size_t num_layers = net.num_layers();
  RelevanceMap map;
  map.rule = rule;
  map.relevance.resize(num_layers);
  map.relevance.back() = init_relevance(net);
  for (std::size_t l = num_layers - 1; l-- > 1;) {
    const std::vector<double>& r_next = map.relevance[l + 1];
    if (const auto* eps = std::get_if<EpsilonRule>(&rule)) {
      map.relevance[l] = propagate_epsilon(net, r_next, l, eps->epsilon);
    } else {
      const auto& ab = std::get<AlphaBetaRule>(rule);
      map.relevance[l] = propagate_alphabeta(net, r_next, l, ab.alpha, ab.beta);
    }
  }
  const double input_eps = std::holds_alternative<EpsilonRule>(rule)
                               ? std::get<EpsilonRule>(rule).epsilon
                               : std::get<AlphaBetaRule>(rule).input_epsilon;
  map.relevance[0] = input_relevance(net, map.relevance[1], input_eps);
  map.conservation_residual = std::fabs(sum(map.relevance.front()) - sum(map.relevance.back()));
  return map;
}

}  // namespace avss
