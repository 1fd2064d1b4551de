// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-sample compilation: aspect-ratio bucket, modality draw, reference crops,
// latent control signal and edge weight map, all derived from one sample seed.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcsc/edge.hpp"
#include "lcsc/embedding.hpp"
#include "lcsc/instruction.hpp"
#include "lcsc/lcs.hpp"
#include "lcsc/rng.hpp"

namespace lcsc {

struct Bucket {
  std::string ratio_id;  // "16:9"
  int ratio_w = 1;
  int ratio_h = 1;
  int target_width = 0;
  int target_height = 0;

  bool operator==(const Bucket&) const = default;
};

/// Bucket for "W:H" at a fixed height; the width is height * W / H rounded to
/// the nearest multiple of `snap` (at least one multiple).
Bucket make_bucket(const std::string& ratio_id, int target_height, int snap = 64);

/// Bucket whose declared ratio is closest to width/height in log space; ties go
/// to the earlier bucket.
const Bucket& assign_bucket(int width, int height, std::span<const Bucket> buckets);

struct EmbeddingSource {
  std::string kind = "stub";  // "stub" | "file"
  std::filesystem::path path;
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  int channels = 1024;
  int latent_divisor = 8;
  int grid = kDefaultGrid;
  double drop_rate = 0.10;
  double p_image = 0.5;
  double edge_threshold = kDefaultEdgeThreshold;
  int bucket_height = 1024;
  int bucket_snap = 64;
  std::vector<Bucket> buckets;
  Schedule schedule{2.0, 88716};
  std::uint64_t seed = 0;
  int reference_size = 364;
  bool emit_reference_crops = true;
  int max_instances = kDefaultMaxInstances;
  EmbeddingSource embeddings;
};

/// Production defaults: buckets 1:1, 4:3, 3:4, 16:9, 9:16 at height 1024.
PipelineConfig default_config();
/// Missing keys keep their defaults; relative embedding paths resolve against `base_dir`.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Independent per-instance draws (Image with probability p_image), each from
/// seed.derive(instance_id). Instances without an image key are always Text;
/// instances described only by an image are always Image.
std::vector<Modality> select_modalities(const InstructionSet& instr, double p_image, Seed seed);

struct AugmentParams {
  bool flip = false;
  double brightness = 1.0;
};

/// flip with probability 0.5, brightness uniform in [0.8, 1.2).
AugmentParams draw_augment(Engine& rng);

/// Mask-bounding-box crop with background zeroed, resized bilinearly to size x size.
RgbImage crop_reference(const RgbImage& image, const InstanceMask& mask, int size);
/// Horizontal flip, then brightness scaling clamped to [0, 1].
RgbImage augment(RgbImage crop, const AugmentParams& params);
RgbImage extract_reference(const RgbImage& image, const InstanceMask& mask, int size, Engine& rng);

struct CompiledSample {
  std::string source_id;
  std::string global_prompt;
  Bucket bucket;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::vector<int> instance_ids;
  std::vector<Modality> modalities;  // parallel to instance_ids
  LatentControlSignal lc;
  EdgeWeightMap weight_map;
  std::vector<std::pair<int, RgbImage>> reference_crops;  // (instance_id, crop) for Image choices

  bool operator==(const CompiledSample&) const = default;
};

/// Pure function of (inputs, global_seed, step). Errors are rethrown with the
/// sample's source id prefixed.
CompiledSample compile_sample(const InstructionSet& instr, const RgbImage& image, const EmbeddingProvider& provider,
                              const PipelineConfig& config, std::int64_t step, std::uint64_t global_seed);

/// Groups sample indices by bucket id, preserving input order inside a group.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_bucket(
    std::span<const CompiledSample> samples);

}  // namespace lcsc
