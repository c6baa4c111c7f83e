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

// avss: layer importance and hallucination-propensity analysis of activation
// dumps.
//
//   avss analyze <dump>                     per-layer score report
//   avss prune-plan <dump> --fraction 0.25  ranked pruning plan
//   avss iterative-prune <dump> --evaluator perf.json --alpha 0.02
//   avss lrp <network.json> --rule epsilon
//   avss plot-data <report.json> <metric>

#include <iostream>

#include "CLI11.hpp"
#include "avss/commands.hpp"
#include "avss/report.hpp"

int main(int argc, char** argv) {
  using namespace avss;

  CLI::App app{"Layer importance (AVSS/EAVSS) analysis of activation dumps", "avss"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--epsilon", global.epsilon, "Sparsity threshold (overrides the manifest)");
  app.add_option("--out", global.out, "Write output to this path instead of stdout");
  app.add_option("--format", global.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--eavss-formula", global.eavss_formula, "EAVSS formula used for ranking")
      ->check(CLI::IsMember({"main", "appendix"}));
  app.add_flag("--hallucination", global.hallucination,
               "Compute hallucination metrics and rank on EAVSS (needs labels)");
  app.add_flag("--pretty", global.pretty, "Print a human-readable table to stderr");

  std::string dump_path;

  auto* analyze = app.add_subcommand("analyze", "Per-layer statistics and scores");
  analyze->add_option("dump", dump_path, "Activation dump directory")->required();

  PrunePlanOptions plan;
  auto* prune_plan = app.add_subcommand("prune-plan", "Rank layers and select a prune set");
  prune_plan->add_option("dump", dump_path, "Activation dump directory")->required();
  prune_plan->add_option("--fraction", plan.fraction, "Prune the lowest floor(f*M) layers");
  prune_plan->add_option("--top-k", plan.top_k, "Keep the K highest-ranked layers");
  prune_plan->add_option("--threshold-redundancy", plan.threshold_redundancy,
                         "Prune layers whose AVSS share is below the value");
  prune_plan->add_option("--threshold-prune", plan.threshold_prune,
                         "Prune layers whose score is below the value");
  prune_plan->add_option("--threshold-importance", plan.threshold_importance,
                         "Prune layers whose score is below the value");
  prune_plan->add_option("--threshold-hallucination", plan.threshold_hallucination,
                         "Prune layers whose propensity is above the value");

  IterativePruneOptions iter;
  auto* iterative = app.add_subcommand("iterative-prune", "Greedy prune loop with a performance gate");
  iterative->add_option("dump", dump_path, "Activation dump directory")->required();
  iterative->add_option("--evaluator", iter.evaluator_path, "Table evaluator JSON")->required();
  iterative->add_option("--alpha", iter.alpha, "Tolerance as a fraction of initial performance");
  iterative->add_option("--delta-abs", iter.delta_abs, "Absolute tolerance per step");
  iterative->add_option("--eps-conv", iter.eps_conv, "Convergence threshold")->capture_default_str();
  iterative->add_flag("--halt-on-convergence", iter.halt_on_convergence,
                      "Stop once an accepted step changes performance by less than --eps-conv");

  LrpOptions lrp_opts;
  std::string network_path;
  auto* lrp = app.add_subcommand("lrp", "Relevance propagation on a dense network");
  lrp->add_option("network", network_path, "Network JSON")->required();
  lrp->add_option("--rule", lrp_opts.rule, "Propagation rule")
      ->check(CLI::IsMember({"epsilon", "alphabeta"}));
  lrp->add_option("--lrp-epsilon", lrp_opts.epsilon, "Stabilizer")->capture_default_str();
  lrp->add_option("--alpha", lrp_opts.alpha, "Alpha (alpha - beta must be 1)")->capture_default_str();
  lrp->add_option("--beta", lrp_opts.beta, "Beta")->capture_default_str();

  std::string report_path;
  std::string metric;
  auto* plot = app.add_subcommand("plot-data", "Extract one per-layer metric as CSV");
  plot->add_option("report", report_path, "Report JSON written by analyze")->required();
  plot->add_option("metric", metric, "Metric name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    write_error(std::cerr, "usage_error", e.what());
    return kExitInput;
  }

  if (*analyze) return cmd_analyze(dump_path, global, std::cout, std::cerr);
  if (*prune_plan) return cmd_prune_plan(dump_path, plan, global, std::cout, std::cerr);
  if (*iterative) return cmd_iterative_prune(dump_path, iter, global, std::cout, std::cerr);
  if (*lrp) return cmd_lrp(network_path, lrp_opts, global, std::cout, std::cerr);
  return cmd_plot_data(report_path, metric, global, std::cout, std::cerr);
}
