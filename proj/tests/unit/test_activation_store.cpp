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

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <random>

#include "avss/activation_store.hpp"
#include "doctest.h"
#include "support/synth.hpp"

namespace fs = std::filesystem;
using namespace avss;

namespace {

ActivationDump two_layer_dump() {
  ActivationDump d;
  d.manifest.model_name = "toy";
  d.manifest.epsilon = 1e-6;
  for (int i = 0; i < 2; ++i) {
    d.manifest.layers.push_back({"layer" + std::to_string(i), 3, 1, 10});
    LayerActivations l;
    l.layer_index = static_cast<std::size_t>(i);
    l.values = {1.0f, 2.0f, 3.0f};
    d.layers.push_back(l);
  }
  return d;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

void write_floats(const fs::path& p, const std::vector<float>& v) {
  std::ofstream out(p, std::ios::binary);
  for (float f : v) {
    unsigned char b[4];
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

std::string error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.kind();
  }
  return "";
}

std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("write_dump lays out manifest and raw binary32 layer files") {
  const fs::path dir = testing::scratch_dir("write");
  write_dump(two_layer_dump(), dir);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::file_size(dir / "layer_0.f32") == 12);
  CHECK(fs::file_size(dir / "layer_1.f32") == 12);
  CHECK_FALSE(fs::exists(dir / "labels_0.bits"));

  // little-endian 1.0f = 00 00 80 3f
  std::ifstream in(dir / "layer_0.f32", std::ios::binary);
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  CHECK(b[0] == 0x00);
  CHECK(b[1] == 0x00);
  CHECK(b[2] == 0x80);
  CHECK(b[3] == 0x3f);
  fs::remove_all(dir);
}

TEST_CASE("labels_present without a mask on one layer is a validation error") {
  ActivationDump d = two_layer_dump();
  d.manifest.labels_present = true;
  d.layers[0].label_mask = std::vector<bool>{true, false, true};
  const fs::path dir = testing::scratch_dir("nomask");
  const std::string msg = error_message([&] { write_dump(d, dir); });
  CHECK(msg.find("layer 1") != std::string::npos);
  CHECK(msg.find("label_mask") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("validate names the offending field") {
  ActivationDump d = two_layer_dump();
  d.layers[1].values.pop_back();
  CHECK(error_kind([&] { validate(d); }) == dump_error::kValidation);
  d = two_layer_dump();
  d.manifest.epsilon = -1.0;
  CHECK(error_message([&] { validate(d); }).find("epsilon") != std::string::npos);
  d = two_layer_dump();
  d.manifest.layers[0].num_samples = 0;
  d.layers[0].values.clear();
  CHECK(error_message([&] { validate(d); }).find("num_samples") != std::string::npos);
}

TEST_CASE("round trip is bit exact over randomized dumps") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    testing::RandomDumpSpec spec;
    spec.labels = trial % 2 == 0;
    ActivationDump d = testing::random_dump(rng, spec);
    d.layers[0].values[0] = -0.0f;
    d.layers[0].values.back() = std::numeric_limits<float>::denorm_min();
    const fs::path dir = testing::scratch_dir("rt");
    write_dump(d, dir);
    const ActivationDump back = read_dump(dir);
    REQUIRE(back.layers.size() == d.layers.size());
    CHECK(back.manifest.epsilon == d.manifest.epsilon);
    CHECK(back.manifest.labels_present == d.manifest.labels_present);
    for (std::size_t i = 0; i < d.layers.size(); ++i) {
      REQUIRE(back.layers[i].values.size() == d.layers[i].values.size());
      CHECK(std::memcmp(back.layers[i].values.data(), d.layers[i].values.data(),
                        d.layers[i].values.size() * 4) == 0);
      CHECK(back.layers[i].label_mask == d.layers[i].label_mask);
      CHECK(back.manifest.layers[i].parameter_count == d.manifest.layers[i].parameter_count);
    }
    fs::remove_all(dir);
  }
}

TEST_CASE("read_dump accepts a hand-written directory") {
  const fs::path dir = testing::scratch_dir("hand");
  write_text(dir / "manifest.json", R"({
    "model_name": "gpt2-toy", "num_layers": 2, "epsilon": 0.001,
    "layers": [
      {"id": "h.0", "num_samples": 2, "values_per_sample": 2, "parameter_count": 7, "has_labels": true},
      {"id": "h.1", "num_samples": 2, "values_per_sample": 2, "parameter_count": 9, "has_labels": true}
    ],
    "reduction": "mean-per-token"})");
  write_floats(dir / "layer_0.f32", {1, 2, 3, 4});
  write_floats(dir / "layer_1.f32", {0, 0, 0.5f, -0.5f});
  write_text(dir / "labels_0.bits", std::string("\x01\x00", 2));
  write_text(dir / "labels_1.bits", std::string("\x01\x00", 2));

  const ActivationDump d = read_dump(dir);
  CHECK(d.manifest.num_layers() == 2);
  CHECK(d.manifest.epsilon == 0.001);
  CHECK(d.manifest.reduction == Reduction::kMeanPerToken);
  CHECK(d.manifest.labels_present);
  CHECK(d.layers[1].values == std::vector<float>{0, 0, 0.5f, -0.5f});
  CHECK(*d.layers[0].label_mask == std::vector<bool>{true, false});
  fs::remove_all(dir);
}

TEST_CASE("read_dump error paths are distinct") {
  const fs::path dir = testing::scratch_dir("errs");
  write_dump(two_layer_dump(), dir);

  SUBCASE("truncated layer file") {
    fs::resize_file(dir / "layer_1.f32", 8);
    const std::string msg = error_message([&] { read_dump(dir); });
    CHECK(error_kind([&] { read_dump(dir); }) == dump_error::kSizeMismatch);
    CHECK(msg.find("layer 1") != std::string::npos);
  }
  SUBCASE("NaN value") {
    std::fstream f(dir / "layer_0.f32", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    const unsigned char nan_le[4] = {0x00, 0x00, 0xC0, 0x7F};  // 0x7FC00000
    f.write(reinterpret_cast<const char*>(nan_le), 4);
    f.close();
    const std::string msg = error_message([&] { read_dump(dir); });
    CHECK(error_kind([&] { read_dump(dir); }) == dump_error::kNonFinite);
    CHECK(msg.find("layer 0") != std::string::npos);
    CHECK(msg.find("index 1") != std::string::npos);
    CHECK(msg.find("byte offset 4") != std::string::npos);
  }
  SUBCASE("missing layer file") {
    fs::remove(dir / "layer_0.f32");
    CHECK(error_kind([&] { read_dump(dir); }) == dump_error::kMissingFile);
  }
  SUBCASE("missing manifest") {
    fs::remove(dir / "manifest.json");
    CHECK(error_kind([&] { read_dump(dir); }) == dump_error::kMissingFile);
  }
  SUBCASE("malformed manifest") {
    write_text(dir / "manifest.json", "{not json");
    CHECK(error_kind([&] { read_dump(dir); }) == dump_error::kMalformedManifest);
  }
  SUBCASE("unknown manifest key") {
    write_text(dir / "manifest.json", R"({"model_name": "x", "num_layers": 0, "layers": [],
                                          "reduction": "flatten", "dtype": "f16"})");
    CHECK(error_message([&] { read_dump(dir); }).find("dtype") != std::string::npos);
  }
  SUBCASE("zero samples") {
    write_text(dir / "manifest.json", R"({"model_name": "x", "num_layers": 1, "reduction": "flatten",
      "layers": [{"id": "a", "num_samples": 0, "values_per_sample": 1, "parameter_count": 1, "has_labels": false}]})");
    CHECK(error_kind([&] { read_dump(dir); }) == dump_error::kValidation);
  }
  SUBCASE("bad label byte") {
    write_text(dir / "manifest.json", R"({"model_name": "x", "num_layers": 1, "reduction": "flatten",
      "layers": [{"id": "a", "num_samples": 3, "values_per_sample": 1, "parameter_count": 1, "has_labels": true}]})");
    write_text(dir / "labels_0.bits", std::string("\x01\x02\x00", 3));
    CHECK(error_message([&] { read_dump(dir); }).find("label byte 1") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("epsilon defaults to 1e-6 when the manifest omits it") {
  const fs::path dir = testing::scratch_dir("noeps");
  ActivationDump d = two_layer_dump();
  d.manifest.epsilon_from_manifest = false;
  write_dump(d, dir);
  const ActivationDump back = read_dump(dir);
  CHECK(back.manifest.epsilon == 1e-6);
  CHECK_FALSE(back.manifest.epsilon_from_manifest);
  fs::remove_all(dir);
}

TEST_CASE("split_by_label partitions whole samples") {
  LayerActivations l;
  l.values = {1, 2, 3, 4, 5, 6, 7, 8};  // 4 samples of width 2
  l.label_mask = std::vector<bool>{true, false, true, false};
  const LabelSplit s = split_by_label(l);
  CHECK(s.hallucination == std::vector<float>{1, 2, 5, 6});
  CHECK(s.non_hallucination == std::vector<float>{3, 4, 7, 8});

  l.label_mask = std::vector<bool>(4, true);
  CHECK(error_kind([&] { split_by_label(l); }) == dump_error::kDegenerateSplit);
  l.label_mask.reset();
  CHECK(error_kind([&] { split_by_label(l); }) == dump_error::kLabelsAbsent);
}

TEST_CASE("split_by_label halves are a permutation of the input") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 50;
    const std::size_t width = 1 + rng() % 4;
    LayerActivations l;
    for (std::size_t k = 0; k < n * width; ++k) l.values.push_back(static_cast<float>(rng() % 1000));
    std::vector<bool> mask(n);
    for (std::size_t s = 0; s < n; ++s) mask[s] = rng() % 2;
    mask[0] = true;
    mask[1] = false;
    l.label_mask = mask;
    const LabelSplit s = split_by_label(l);
    std::vector<float> joined = s.hallucination;
    joined.insert(joined.end(), s.non_hallucination.begin(), s.non_hallucination.end());
    std::vector<float> expected = l.values;
    std::sort(joined.begin(), joined.end());
    std::sort(expected.begin(), expected.end());
    CHECK(joined == expected);
  }
}
