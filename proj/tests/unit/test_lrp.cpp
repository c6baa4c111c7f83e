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

#include <cmath>
#include <numeric>
#include <random>

#include "avss/error.hpp"
#include "avss/lrp.hpp"
#include "doctest.h"

using namespace avss;
using doctest::Approx;

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

DenseNetwork random_positive_net(std::mt19937_64& rng, std::size_t max_layers,
                                 std::size_t max_width) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const std::size_t layers = 2 + rng() % (max_layers - 1);
  std::vector<std::size_t> widths(layers);
  for (auto& w : widths) w = 1 + rng() % max_width;
  std::vector<std::vector<double>> weights;
  for (std::size_t j = 0; j + 1 < layers; ++j) {
    std::vector<double> m(widths[j] * widths[j + 1]);
    for (double& w : m) w = u(rng);
    weights.push_back(std::move(m));
  }
  std::vector<double> x(widths[0]);
  for (double& v : x) v = u(rng);
  return DenseNetwork(widths, Nonlinearity::kRelu, weights, x);
}

}  // namespace

TEST_CASE("forward pass and init_relevance") {
  const DenseNetwork net({2, 2}, Nonlinearity::kIdentity, {{0.7, 0.0, 0.0, 0.3}}, {1.0, 1.0});
  CHECK(init_relevance(net) == std::vector<double>{0.7, 0.3});
  const DenseNetwork scalar({1, 1}, Nonlinearity::kRelu, {{1.0}}, {1.0});
  CHECK(init_relevance(scalar) == std::vector<double>{1.0});

  // Hidden ReLU, linear output.
  const DenseNetwork relu({1, 1, 1}, Nonlinearity::kRelu, {{-1.0}, {1.0}}, {2.0});
  CHECK(relu.activations(1) == std::vector<double>{0.0});
  const DenseNetwork lin({1, 1, 1}, Nonlinearity::kRelu, {{1.0}, {-3.0}}, {2.0});
  CHECK(lin.output() == std::vector<double>{-6.0});
  CHECK_NOTHROW(lin.validate());

  CHECK_THROWS_AS(DenseNetwork({2, 1}, Nonlinearity::kRelu, {{1.0}}, {1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(DenseNetwork({2, 1}, Nonlinearity::kRelu, {{1.0, 1.0}}, {1.0}), ValidationError);
}

TEST_CASE("network JSON") {
  const DenseNetwork net = DenseNetwork::from_json(
      R"({"widths":[2,1],"nonlinearity":"relu","weights":[[1,1]],"input":[1,2]})");
  CHECK(net.output() == std::vector<double>{3.0});
  CHECK_THROWS_AS(DenseNetwork::from_json(R"({"widths":[2,1]})"), ValidationError);
  CHECK_THROWS_AS(
      DenseNetwork::from_json(
          R"({"widths":[1,1],"nonlinearity":"relu","weights":[[1]],"input":[1],"bias":[0]})"),
      ValidationError);
  CHECK_THROWS_AS(DenseNetwork::from_json("{"), ValidationError);
}

TEST_CASE("epsilon rule") {
  const DenseNetwork both({2, 1}, Nonlinearity::kIdentity, {{1.0, 1.0}}, {1.0, 1.0});
  const auto r = propagate_epsilon(both, std::vector<double>{2.0}, 0, 1e-9);
  CHECK(std::fabs(r[0] - 1.0) < 1e-8);
  CHECK(std::fabs(r[1] - 1.0) < 1e-8);

  const DenseNetwork one({2, 1}, Nonlinearity::kIdentity, {{1.0, 1.0}}, {1.0, 0.0});
  const auto r1 = propagate_epsilon(one, std::vector<double>{2.0}, 0, 1e-9);
  CHECK(std::fabs(r1[0] - 2.0) < 1e-8);
  CHECK(r1[1] == 0.0);

  SUBCASE("zero activations leak all relevance") {
    const DenseNetwork zero({2, 1}, Nonlinearity::kIdentity, {{1.0, 1.0}}, {0.0, 0.0});
    const auto rz = propagate_epsilon(zero, std::vector<double>{1.0}, 0, 1e-9);
    CHECK(rz == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("negative denominator is stabilized away from zero") {
    const DenseNetwork neg({2, 1}, Nonlinearity::kIdentity, {{-1.0, -1.0}}, {1.0, 1.0});
    const auto rn = propagate_epsilon(neg, std::vector<double>{-2.0}, 0, 1e-9);
    CHECK(rn[0] == Approx(-1.0));
    CHECK(rn[1] == Approx(-1.0));
  }
  CHECK_THROWS_AS(propagate_epsilon(both, std::vector<double>{1.0, 1.0}, 0, 1e-9), ValidationError);
  CHECK_THROWS_AS(propagate_epsilon(both, std::vector<double>{1.0}, 1, 1e-9), ValidationError);
}

TEST_CASE("alpha-beta rule") {
  const DenseNetwork net({2, 1}, Nonlinearity::kIdentity, {{1.0, -1.0}}, {1.0, 1.0});
  const auto r = propagate_alphabeta(net, std::vector<double>{1.0}, 0, 2.0, 1.0);
  CHECK(r[0] == Approx(2.0));
  CHECK(r[1] == Approx(-1.0));

  try {
    propagate_alphabeta(net, std::vector<double>{1.0}, 0, 0.5, 0.0);
    FAIL("expected constraint error");
  } catch (const ValidationError& e) {
    CHECK(e.kind() == "alpha_beta_constraint");
    CHECK(std::string(e.what()).find("alpha - beta = 1 violated") != std::string::npos);
  }
  CHECK_THROWS_AS(run_lrp(net, AlphaBetaRule{0.5, 0.0}), ValidationError);
}

TEST_CASE("input_relevance") {
  const DenseNetwork single({1, 1}, Nonlinearity::kIdentity, {{1.0}}, {1.0});
  CHECK(input_relevance(single, std::vector<double>{0.5})[0] == Approx(0.5));
  const DenseNetwork pair({2, 1}, Nonlinearity::kIdentity, {{0.3, 0.3}}, {2.0, 2.0});
  const auto r = input_relevance(pair, std::vector<double>{1.0});
  CHECK(r[0] == r[1]);
  CHECK(r[0] == Approx(0.5));
}

TEST_CASE("identity network passes the input through") {
  const DenseNetwork net({3, 3, 3}, Nonlinearity::kIdentity,
                         {{1, 0, 0, 0, 1, 0, 0, 0, 1}, {1, 0, 0, 0, 1, 0, 0, 0, 1}},
                         {0.5, 2.0, 3.5});
  const RelevanceMap map = run_lrp(net, EpsilonRule{});
  CHECK(map.relevance.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(map.relevance[0][k] == Approx(net.activations(0)[k]).epsilon(1e-8));
  }
  // Each junction leaks about epsilon per active neuron.
  CHECK(map.conservation_residual < 1e-8);
  CHECK(map.conservation_residual == Approx(std::fabs(total(map.relevance[0]) - total(net.output()))));
}

TEST_CASE("random positive nets conserve and the rules agree") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const DenseNetwork net = random_positive_net(rng, 4, 8);
    const RelevanceMap eps = run_lrp(net, EpsilonRule{1e-9});
    const RelevanceMap ab = run_lrp(net, AlphaBetaRule{1.0, 0.0});
    CHECK(eps.conservation_residual < 1e-6);
    CHECK(ab.conservation_residual < 1e-6);
    CHECK(std::fabs(total(eps.relevance[0]) - total(net.output())) < 1e-6);
    for (std::size_t k = 0; k < eps.relevance[0].size(); ++k) {
      CHECK(std::fabs(eps.relevance[0][k] - ab.relevance[0][k]) < 1e-5);
    }
  }
}

TEST_CASE("relevance is linear in the input") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseNetwork net = random_positive_net(rng, 4, 6);
    std::vector<std::vector<double>> weights;
    for (std::size_t j = 0; j < net.num_junctions(); ++j) weights.push_back(net.junction_weights(j));
    std::vector<double> x = net.activations(0);
    for (double& v : x) v *= 3.0;
    const DenseNetwork scaled(net.widths(), net.nonlinearity(), weights, x);
    const auto a = run_lrp(net, EpsilonRule{1e-12}).relevance[0];
    const auto b = run_lrp(scaled, EpsilonRule{1e-12}).relevance[0];
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == Approx(3.0 * a[k]).epsilon(1e-9));
  }
}
