// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Random and hand-made inputs shared by the unit tests and the acceptance run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lcsc/grid.hpp"
#include "lcsc/instruction.hpp"
#include "lcsc/pipeline.hpp"
#include "lcsc/rng.hpp"

namespace lcsc::fixture {

inline std::filesystem::path data_dir() { return LCSC_TEST_DATA; }

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lcsc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Paints up to `n` random rectangles (labels 1..n) in order; later ones cover earlier ones.
inline LabelImage random_labels(Engine& rng, int width, int height, int n) {
  LabelImage labels(width, height, 0);
  for (int id = 1; id <= n; ++id) {
    const int w = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(width)));
    const int h = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(height)));
    const int x0 = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(width - w + 1)));
    const int y0 = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(height - h + 1)));
    for (int y = y0; y < y0 + h; ++y) {
      for (int x = x0; x < x0 + w; ++x) labels.at(x, y) = static_cast<std::uint16_t>(id);
    }
  }
  return labels;
}

inline Grid<std::uint8_t> label_mask(const LabelImage& labels, int id) {
  Grid<std::uint8_t> g(labels.width, labels.height, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) g.data[i] = labels.data[i] == id ? 1 : 0;
  return g;
}

/// One instance per surviving label. Instance i is image-described when bit
/// (i % 64) of `image_bits` is set, text-described otherwise.
inline std::vector<InstanceSpec> instances_from_labels(const LabelImage& labels, int n, std::uint64_t image_bits = 0) {
  std::vector<InstanceSpec> out;
  for (int id = 1; id <= n; ++id) {
    InstanceSpec spec;
    spec.instance_id = id;
    spec.mask = InstanceMask::from_grid(label_mask(labels, id));
    if (spec.mask.empty()) continue;
    if ((image_bits >> (id % 64)) & 1) {
      spec.description = ImageRef{"img" + std::to_string(id)};
    } else {
      spec.description = TextRef{"txt" + std::to_string(id)};
    }
    spec.image_key = "img" + std::to_string(id);
    out.push_back(std::move(spec));
  }
  return out;
}

inline InstructionSet random_set(Engine& rng, int width, int height, int n, std::uint64_t image_bits,
                                 const std::string& source_id = "random") {
  const LabelImage labels = random_labels(rng, width, height, n);
  return InstructionSet::create(source_id, "a scene", width, height, instances_from_labels(labels, n, image_bits));
}

inline RgbImage gradient_image(int width, int height, int phase = 0) {
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y, 0) = static_cast<float>((x * 7 + phase) % 256) / 255.0f;
      img.at(x, y, 1) = static_cast<float>((y * 5 + 2 * phase) % 256) / 255.0f;
      img.at(x, y, 2) = ((x / 16 + y / 16) % 2) ? 0.9f : 0.1f;
    }
  }
  return img;
}

/// Small config for the golden sample.
inline PipelineConfig toy_config() {
  nlohmann::json doc = {{"channels", 8},        {"grid", 6},
                        {"bucket_height", 64},  {"bucket_snap", 16},
                        {"reference_size", 8},  {"p_image", 1.0},
                        {"schedule", {{"m", 2.0}, {"n", 100}}}};
  return parse_config(doc);
}

/// Two instances on a 64x64 gradient: a text-only left half and an
/// image-capable right half.
inline InstructionSet toy_instructions() {
  Grid<std::uint8_t> left(64, 64, 0), right(64, 64, 0);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) (x < 30 ? left : right).at(x, y) = (y >= 4 && y < 60) ? 1 : 0;
  }
  return InstructionSet::create(
      "toy", "two things", 64, 64,
      {InstanceSpec{1, InstanceMask::from_grid(left), TextRef{"left thing"}, std::nullopt},
       InstanceSpec{2, InstanceMask::from_grid(right), TextRef{"right thing"}, std::string("right ref")}});
}

inline std::filesystem::path golden_path() { return data_dir() / "golden" / "toy.lcsc"; }

}  // namespace lcsc::fixture
