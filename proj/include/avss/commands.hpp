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

// Command implementations behind the `avss` CLI. Each returns the process exit
// code: 0 success, 2 input/validation error, 3 evaluator error. Errors are
// written to `err` as a one-line JSON object.

#ifndef AVSS_COMMANDS_HPP_
#define AVSS_COMMANDS_HPP_

#include <optional>
#include <ostream>
#include <string>

namespace avss {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEvaluator = 3;

struct GlobalOptions {
  std::optional<double> epsilon;
  std::string out;  // empty: stdout
  std::string format = "json";
  std::string eavss_formula = "main";
  bool hallucination = false;
  bool pretty = false;
};

struct PrunePlanOptions {
  std::optional<double> fraction;
  std::optional<std::size_t> top_k;
  std::optional<double> threshold_redundancy;
  std::optional<double> threshold_prune;
  std::optional<double> threshold_importance;
  std::optional<double> threshold_hallucination;
};

struct IterativePruneOptions {
  std::string evaluator_path;
  std::optional<double> alpha;
  std::optional<double> delta_abs;
  double eps_conv = 1e-6;
  bool halt_on_convergence = false;
};

struct LrpOptions {
  std::string rule = "epsilon";
  double epsilon = 1e-9;
  double alpha = 1.0;
  double beta = 0.0;
};

int cmd_analyze(const std::string& dump_path, const GlobalOptions& global, std::ostream& out,
                std::ostream& err);

int cmd_prune_plan(const std::string& dump_path, const PrunePlanOptions& options,
                   const GlobalOptions& global, std::ostream& out, std::ostream& err);

int cmd_iterative_prune(const std::string& dump_path, const IterativePruneOptions& options,
                        const GlobalOptions& global, std::ostream& out, std::ostream& err);

int cmd_lrp(const std::string& network_path, const LrpOptions& options,
            const GlobalOptions& global, std::ostream& out, std::ostream& err);

int cmd_plot_data(const std::string& report_path, const std::string& metric,
                  const GlobalOptions& global, std::ostream& out, std::ostream& err);

// Writes {"error": {"kind": ..., "message": ...}} and a newline.
void write_error(std::ostream& err, const std::string& kind, const std::string& message);

}  // namespace avss

#endif  // AVSS_COMMANDS_HPP_
