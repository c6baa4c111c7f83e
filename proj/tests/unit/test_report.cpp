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
#include <limits>
#include <random>
#include <sstream>

#include "avss/error.hpp"
#include "avss/json_writer.hpp"
#include "avss/report.hpp"
#include "doctest.h"
#include "support/synth.hpp"

using namespace avss;
using nlohmann::ordered_json;

namespace {

ActivationDump two_layer_dump() {
  ActivationDump d;
  d.manifest.model_name = "tiny";
  d.manifest.epsilon = 1e-6;
  d.manifest.labels_present = true;
  d.manifest.layers = {{"a", 4, 1, 10}, {"b", 4, 1, 30}};
  d.layers.push_back({0, {1, 2, 3, 4}, std::vector<bool>{true, false, true, false}});
  d.layers.push_back({1, {0, 0, 6, 2}, std::vector<bool>{true, false, true, false}});
  return d;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("format_number") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "null");
  CHECK(format_number(std::nan("")) == "null");

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("write_json layout") {
  ordered_json j;
  j["b"] = 1;
  j["a"] = ordered_json::array({1.5, 2, "x"});
  j["o"] = ordered_json::object();
  j["rows"] = ordered_json::array({ordered_json{{"k", -0.0}}});
  CHECK(write_json(j) ==
        "{\n"
        "  \"b\": 1,\n"
        "  \"a\": [1.5, 2, \"x\"],\n"
        "  \"o\": {},\n"
        "  \"rows\": [\n"
        "    {\n"
        "      \"k\": 0\n"
        "    }\n"
        "  ]\n"
        "}\n");
  // Output parses back to the same values.
  CHECK(ordered_json::parse(write_json(j))["a"][0] == 1.5);
}

TEST_CASE("analysis report rows") {
  const ActivationDump d = two_layer_dump();
  AnalyzeConfig cfg;
  const Analysis a = analyze(d, cfg);
  const ordered_json r = analysis_report(d, a, cfg);
  REQUIRE(r["layers"].size() == 2);
  CHECK(r["layers"][1]["id"] == "b");
  CHECK(r["layers"][1]["sparsity"].get<double>() == 0.5);
  CHECK(r["layers"][0]["flags"] == ordered_json::array({"avss_floored"}));
  CHECK_FALSE(r["layers"][0].contains("hsav"));
  CHECK(r["model"]["total_parameters"] == 40);
  CHECK(a.epsilon_source == "manifest");

  AnalyzeConfig hcfg;
  hcfg.hallucination = true;
  const ordered_json h = analysis_report(d, analyze(d, hcfg), hcfg);
  CHECK(h["layers"][0].contains("hsav"));
  CHECK(h["layers"][0].contains("eavss"));

  SUBCASE("json survives a write/parse cycle unchanged") {
    const std::string text = write_json(h);
    CHECK(write_json(ordered_json::parse(text)) == text);
  }
}

TEST_CASE("csv views") {
  const ActivationDump d = two_layer_dump();
  AnalyzeConfig cfg;
  const ordered_json r = analysis_report(d, analyze(d, cfg), cfg);
  const std::string csv = analysis_csv(r);
  CHECK(count_lines(csv) == 3);
  CHECK(csv.rfind("layer,id,", 0) == 0);
  // Values in the CSV are the JSON text of the same numbers.
  CHECK(csv.find(format_number(r["layers"][1]["avss"].get<double>())) != std::string::npos);
}

TEST_CASE("plot data") {
  const ActivationDump d = two_layer_dump();
  AnalyzeConfig cfg;
  const ordered_json r = ordered_json::parse(write_json(analysis_report(d, analyze(d, cfg), cfg)));
  const std::string csv = plot_data_csv(r, "avss");
  CHECK(csv == "layer,avss\n0," + format_number(r["layers"][0]["avss"].get<double>()) + "\n1," +
                   format_number(r["layers"][1]["avss"].get<double>()) + "\n");
  const auto names = plot_metrics(r);
  CHECK(std::find(names.begin(), names.end(), "norm_avss") != names.end());
  CHECK(std::find(names.begin(), names.end(), "id") == names.end());
  try {
    plot_data_csv(r, "bogus");
    FAIL("expected unknown_metric");
  } catch (const ValidationError& e) {
    CHECK(e.kind() == "unknown_metric");
    CHECK(std::string(e.what()).find("norm_avss") != std::string::npos);
  }
  CHECK_THROWS_AS(plot_data_csv(ordered_json::object(), "avss"), ValidationError);
}

TEST_CASE("plan and trace reports") {
  const ActivationDump d = two_layer_dump();
  AnalyzeConfig cfg;
  const Analysis a = analyze(d, cfg);
  const PlanInputs in = plan_inputs(a);
  CHECK(in.pinned == std::vector<bool>{true, false});
  Thresholds t;
  t.prune_fraction = 0.5;
  std::vector<std::uint64_t> params{10, 30};
  const PruningPlan plan = build_pruning_plan(in, params, t);
  CHECK(plan.prune_set == std::vector<std::size_t>{1});
  const ordered_json pr = plan_report(d, a, cfg, plan);
  CHECK(pr["plan"]["prune_set"] == ordered_json::array({1}));
  CHECK(pr["plan"].contains("tie_break"));
  CHECK(count_lines(plan_csv(pr)) == 3);

  Thresholds it;
  it.delta_abs = 0.1;
  const auto trace =
      iterative_prune(in.importance, [](std::span<const std::size_t>) { return 1.0; }, it, in.pinned);
  const ordered_json tr = trace_report(d, a, cfg, it, "table.json", trace);
  CHECK(count_lines(trace_csv(tr)) == 1 + trace.steps.size());
}

TEST_CASE("pretty table") {
  const ActivationDump d = two_layer_dump();
  AnalyzeConfig cfg;
  const std::string s = pretty_table(analysis_report(d, analyze(d, cfg), cfg));
  CHECK(count_lines(s) == 3);
}
