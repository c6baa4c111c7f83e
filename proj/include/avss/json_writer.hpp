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

// Deterministic JSON/CSV emission. Floating-point values are written with 17
// significant digits so every 64-bit double round-trips exactly.

#ifndef AVSS_JSON_WRITER_HPP_
#define AVSS_JSON_WRITER_HPP_

#include <string>

#include "json.hpp"

namespace avss {

// "%.17g"; non-finite values become "null".
std::string format_number(double v);

// Serializes in insertion order with two-space indentation and a trailing
// newline.
std::string write_json(const nlohmann::ordered_json& value);

}  // namespace avss

#endif  // AVSS_JSON_WRITER_HPP_
