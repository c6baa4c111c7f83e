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

// Activation dump data model and its on-disk format.
//
// A dump directory holds:
//   manifest.json   model metadata, epsilon, per-layer counts
//   layer_<i>.f32   num_samples * values_per_sample little-endian binary32,
//                   sample-major
//   labels_<i>.bits one byte per sample, 0x00 = false, 0x01 = true
//                   (present only when the dump carries labels)

#ifndef AVSS_ACTIVATION_STORE_HPP_
#define AVSS_ACTIVATION_STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avss/error.hpp"

namespace avss {

inline constexpr double kDefaultEpsilon = 1e-6;

// Error kinds raised by the store.
namespace dump_error {
inline constexpr const char* kIo = "io_error";
inline constexpr const char* kValidation = "validation_error";
inline constexpr const char* kMissingFile = "missing_file";
inline constexpr const char* kSizeMismatch = "size_mismatch";
inline constexpr const char* kNonFinite = "non_finite_value";
inline constexpr const char* kMalformedManifest = "malformed_manifest";
inline constexpr const char* kLabelsAbsent = "labels_absent";
inline constexpr const char* kDegenerateSplit = "degenerate_split";
}  // namespace dump_error

// How each input's layer tensor was reduced to `values_per_sample` scalars.
enum class Reduction { kFlatten, kMeanPerToken };

std::string to_string(Reduction r);
Reduction parse_reduction(const std::string& s);

struct LayerInfo {
  std::string id;
  std::size_t num_samples = 0;
  std::size_t values_per_sample = 0;
  std::uint64_t parameter_count = 0;
};

struct ModelManifest {
  std::string model_name;
  double epsilon = kDefaultEpsilon;
  // False when the manifest omitted epsilon and the default was substituted.
  bool epsilon_from_manifest = true;
  Reduction reduction = Reduction::kFlatten;
  bool labels_present = false;
  std::vector<LayerInfo> layers;

  std::size_t num_layers() const { return layers.size(); }
};

struct LayerActivations {
  std::size_t layer_index = 0;
  std::vector<float> values;
  // One flag per sample; true marks a sample from a hallucinated output.
  std::optional<std::vector<bool>> label_mask;
};

struct ActivationDump {
  ModelManifest manifest;
  std::vector<LayerActivations> layers;
};

// Throws ValidationError (kind kValidation) naming the offending field.
void validate(const ActivationDump& dump);

// Writes manifest.json and the per-layer binaries into `dir`, creating it if
// needed. The dump is validated first.
void write_dump(const ActivationDump& dump, const std::filesystem::path& dir);

// Loads and fully validates a dump directory. File sizes are cross-checked
// against the manifest and every value must be finite.
ActivationDump read_dump(const std::filesystem::path& dir);

// Parses manifest.json text. Unknown keys are rejected.
ModelManifest parse_manifest(const std::string& text);
std::string serialize_manifest(const ModelManifest& manifest);

struct LabelSplit {
  std::vector<float> hallucination;
  std::vector<float> non_hallucination;
};

// Partitions a layer's values by its sample mask. Each sample contributes its
// values_per_sample consecutive values. Throws kLabelsAbsent without a mask and
// kDegenerateSplit when either side is empty.
LabelSplit split_by_label(const LayerActivations& layer);

}  // namespace avss

#endif  // AVSS_ACTIVATION_STORE_HPP_
