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

#ifndef AVSS_ERROR_HPP_
#define AVSS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace avss {

// Base for every error raised by the engine. `kind()` is a stable,
// machine-readable tag used in CLI error objects.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// Bad input data or arguments. Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failure inside a performance evaluator. Maps to CLI exit code 3.
class EvaluatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace avss

#endif  // AVSS_ERROR_HPP_
