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

#include "avss/activation_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace avss {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559,
              "binary32 floats required");

[[noreturn]] void fail(const char* kind, const std::string& msg) {
  throw ValidationError(kind, msg);
}

std::string layer_file(std::size_t i) { return "layer_" + std::to_string(i) + ".f32"; }
std::string labels_file(std::size_t i) { return "labels_" + std::to_string(i) + ".bits"; }

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(dump_error::kMalformedManifest, where + ": unknown key '" + key + "'");
  }
}

const ordered_json& require(const ordered_json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(dump_error::kMalformedManifest, where + ": missing key '" + key + "'");
  return *it;
}

std::uint64_t require_uint(const ordered_json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    fail(dump_error::kMalformedManifest, where + ": '" + key + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(dump_error::kIo, "cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return buf;
}

void write_file(const fs::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(dump_error::kIo, "cannot open " + path.string() + " for writing");
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) fail(dump_error::kIo, "write failed: " + path.string());
}

}  // namespace

std::string to_string(Reduction r) {
  return r == Reduction::kFlatten ? "flatten" : "mean-per-token";
}

Reduction parse_reduction(const std::string& s) {
  if (s == "flatten") return Reduction::kFlatten;
  if (s == "mean-per-token") return Reduction::kMeanPerToken;
  fail(dump_error::kMalformedManifest, "unknown reduction '" + s + "'");
}

void validate(const ActivationDump& dump) {
  const ModelManifest& m = dump.manifest;
  const std::size_t num_layers = m.num_layers();
  if (num_layers == 0) fail(dump_error::kValidation, "num_layers: must be positive");
  if (!std::isfinite(m.epsilon) || m.epsilon < 0.0) {
    fail(dump_error::kValidation, "epsilon: must be a finite nonnegative number");
  }
  if (dump.layers.size() != num_layers) {
    fail(dump_error::kValidation, "layers: expected " + std::to_string(num_layers) +
                                      " layers, got " + std::to_string(dump.layers.size()));
  }
  for (std::size_t i = 0; i < num_layers; ++i) {
    const LayerInfo& info = m.layers[i];
    const LayerActivations& layer = dump.layers[i];
    const std::string where = "layer " + std::to_string(i);
    if (info.num_samples == 0) fail(dump_error::kValidation, where + ": num_samples must be >= 1");
    if (info.values_per_sample == 0) {
      fail(dump_error::kValidation, where + ": values_per_sample must be >= 1");
    }
    if (layer.layer_index != i) {
      fail(dump_error::kValidation, where + ": layer_index is " + std::to_string(layer.layer_index));
    }
    if (layer.values.size() != info.num_samples * info.values_per_sample) {
      fail(dump_error::kValidation, where + ": values length " + std::to_string(layer.values.size()) +
                                        " != num_samples * values_per_sample");
    }
    if (m.labels_present && !layer.label_mask) {
      fail(dump_error::kValidation, where + ": label_mask missing while labels_present is true");
    }
    if (!m.labels_present && layer.label_mask) {
      fail(dump_error::kValidation, where + ": label_mask present while labels_present is false");
    }
    if (layer.label_mask && layer.label_mask->size() != info.num_samples) {
      fail(dump_error::kValidation, where + ": label_mask length != num_samples");
    }
    for (std::size_t k = 0; k < layer.values.size(); ++k) {
      if (!std::isfinite(layer.values[k])) {
        fail(dump_error::kNonFinite, where + ": non-finite value at index " + std::to_string(k));
      }
    }
  }
}

ModelManifest parse_manifest(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(dump_error::kMalformedManifest, std::string("manifest.json: ") + e.what());
  }
  if (!j.is_object()) fail(dump_error::kMalformedManifest, "manifest.json: not an object");
  check_keys(j, {"model_name", "num_layers", "epsilon", "layers", "reduction"}, "manifest");

  ModelManifest m;
  const auto& name = require(j, "model_name", "manifest");
  if (!name.is_string()) fail(dump_error::kMalformedManifest, "manifest: model_name must be a string");
  m.model_name = name.get<std::string>();

  const std::uint64_t num_layers = require_uint(j, "num_layers", "manifest");

  if (auto it = j.find("epsilon"); it != j.end()) {
    if (!it->is_number()) fail(dump_error::kMalformedManifest, "manifest: epsilon must be a number");
    m.epsilon = it->get<double>();
    m.epsilon_from_manifest = true;
  } else {
    m.epsilon = kDefaultEpsilon;
    m.epsilon_from_manifest = false;
  }

  const auto& red = require(j, "reduction", "manifest");
  if (!red.is_string()) fail(dump_error::kMalformedManifest, "manifest: reduction must be a string");
  m.reduction = parse_reduction(red.get<std::string>());

  const auto& layers = require(j, "layers", "manifest");
  if (!layers.is_array()) fail(dump_error::kMalformedManifest, "manifest: layers must be an array");
  if (layers.size() != num_layers) {
    fail(dump_error::kMalformedManifest, "manifest: num_layers (" + std::to_string(num_layers) +
                                             ") != length of layers (" +
                                             std::to_string(layers.size()) + ")");
  }
  std::size_t with_labels = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "manifest layers[" + std::to_string(i) + "]";
    if (!l.is_object()) fail(dump_error::kMalformedManifest, where + ": not an object");
    check_keys(l, {"id", "num_samples", "values_per_sample", "parameter_count", "has_labels"}, where);
    LayerInfo info;
    const auto& id = require(l, "id", where);
    if (!id.is_string()) fail(dump_error::kMalformedManifest, where + ": id must be a string");
    info.id = id.get<std::string>();
    info.num_samples = require_uint(l, "num_samples", where);
    info.values_per_sample = require_uint(l, "values_per_sample", where);
    info.parameter_count = require_uint(l, "parameter_count", where);
    const auto& hl = require(l, "has_labels", where);
    if (!hl.is_boolean()) fail(dump_error::kMalformedManifest, where + ": has_labels must be a boolean");
    if (hl.get<bool>()) ++with_labels;
    m.layers.push_back(std::move(info));
  }
  if (with_labels != 0 && with_labels != m.layers.size()) {
    fail(dump_error::kValidation, "manifest: has_labels must be the same on every layer");
  }
  m.labels_present = with_labels != 0;
  return m;
}

std::string serialize_manifest(const ModelManifest& m) {
  ordered_json j;
  j["model_name"] = m.model_name;
  j["num_layers"] = m.num_layers();
  if (m.epsilon_from_manifest) j["epsilon"] = m.epsilon;
  ordered_json layers = ordered_json::array();
  for (const LayerInfo& info : m.layers) {
    ordered_json l;
    l["id"] = info.id;
    l["num_samples"] = info.num_samples;
    l["values_per_sample"] = info.values_per_sample;
    l["parameter_count"] = info.parameter_count;
    l["has_labels"] = m.labels_present;
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  j["reduction"] = to_string(m.reduction);
  return j.dump(2) + "\n";
}

void write_dump(const ActivationDump& dump, const fs::path& dir) {
  validate(dump);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(dump_error::kIo, "cannot create " + dir.string() + ": " + ec.message());

  const std::string manifest = serialize_manifest(dump.manifest);
  write_file(dir / "manifest.json", manifest.data(), manifest.size());

  for (std::size_t i = 0; i < dump.layers.size(); ++i) {
    const auto& values = dump.layers[i].values;
    std::vector<char> bytes(values.size() * 4);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const std::uint32_t le = to_little_endian(std::bit_cast<std::uint32_t>(values[k]));
      std::memcpy(bytes.data() + 4 * k, &le, 4);
    }
    write_file(dir / layer_file(i), bytes.data(), bytes.size());

    if (const auto& mask = dump.layers[i].label_mask) {
      std::vector<char> flags(mask->size());
      for (std::size_t k = 0; k < mask->size(); ++k) flags[k] = (*mask)[k] ? 0x01 : 0x00;
      write_file(dir / labels_file(i), flags.data(), flags.size());
    }
  }
}

ActivationDump read_dump(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    fail(dump_error::kMissingFile, "missing file: " + manifest_path.string());
  }
  const std::vector<char> text = read_file(manifest_path);
  ActivationDump dump;
  dump.manifest = parse_manifest(std::string(text.begin(), text.end()));

  const std::size_t num_layers = dump.manifest.num_layers();
  dump.layers.resize(num_layers);
  for (std::size_t i = 0; i < num_layers; ++i) {
    const LayerInfo& info = dump.manifest.layers[i];
    const std::string where = "layer " + std::to_string(i);
    if (info.num_samples == 0) fail(dump_error::kValidation, where + ": num_samples must be >= 1");
    if (info.values_per_sample == 0) {
      fail(dump_error::kValidation, where + ": values_per_sample must be >= 1");
    }

    const fs::path path = dir / layer_file(i);
    if (!fs::exists(path)) fail(dump_error::kMissingFile, "missing file: " + path.string());
    const std::uintmax_t expected = static_cast<std::uintmax_t>(info.num_samples) *
                                    info.values_per_sample * 4;
    const std::uintmax_t actual = fs::file_size(path);
    if (actual != expected) {
      fail(dump_error::kSizeMismatch, where + ": " + path.filename().string() + " has " +
                                          std::to_string(actual) + " bytes, expected " +
                                          std::to_string(expected));
    }
    const std::vector<char> bytes = read_file(path);
    if (bytes.size() != expected) {
      fail(dump_error::kSizeMismatch, where + ": short read on " + path.filename().string());
    }

    LayerActivations& layer = dump.layers[i];
    layer.layer_index = i;
    layer.values.resize(bytes.size() / 4);
    for (std::size_t k = 0; k < layer.values.size(); ++k) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + 4 * k, 4);
      const float v = std::bit_cast<float>(to_little_endian(raw));
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << where << ": non-finite value at index " << k << " (byte offset " << 4 * k << ")";
        fail(dump_error::kNonFinite, msg.str());
      }
      layer.values[k] = v;
    }

    if (dump.manifest.labels_present) {
      const fs::path lpath = dir / labels_file(i);
      if (!fs::exists(lpath)) fail(dump_error::kMissingFile, "missing file: " + lpath.string());
      const std::vector<char> flags = read_file(lpath);
      if (flags.size() != info.num_samples) {
        fail(dump_error::kSizeMismatch, where + ": " + lpath.filename().string() + " has " +
                                            std::to_string(flags.size()) + " bytes, expected " +
                                            std::to_string(info.num_samples));
      }
      std::vector<bool> mask(flags.size());
      for (std::size_t k = 0; k < flags.size(); ++k) {
        if (flags[k] != 0x00 && flags[k] != 0x01) {
          fail(dump_error::kValidation, where + ": label byte " + std::to_string(k) +
                                            " is neither 0x00 nor 0x01");
        }
        mask[k] = flags[k] == 0x01;
      }
      layer.label_mask = std::move(mask);
    }
  }
  validate(dump);
  return dump;
}

LabelSplit split_by_label(const LayerActivations& layer) {
  if (!layer.label_mask) {
    fail(dump_error::kLabelsAbsent,
         "layer " + std::to_string(layer.layer_index) + ": labels absent");
  }
  const std::vector<bool>& mask = *layer.label_mask;
  if (mask.empty() || layer.values.size() % mask.size() != 0) {
    fail(dump_error::kValidation,
         "layer " + std::to_string(layer.layer_index) + ": values do not divide into samples");
  }
  const std::size_t width = layer.values.size() / mask.size();
  LabelSplit split;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    auto& dst = mask[s] ? split.hallucination : split.non_hallucination;
    const auto first = layer.values.begin() + static_cast<std::ptrdiff_t>(s * width);
    dst.insert(dst.end(), first, first + static_cast<std::ptrdiff_t>(width));
  }
  if (split.hallucination.empty() || split.non_hallucination.empty()) {
    fail(dump_error::kDegenerateSplit,
         "layer " + std::to_string(layer.layer_index) +
             ": degenerate label split (one side has no samples)");
  }
  return split;
}

}  // namespace avss
