// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Latent control signal construction. Text instances are painted (one vector
// copied into every cell of the instance), image instances are warped from a
// patch-feature grid into the instance's bounding box with bilinear sampling,
// after which a fixed fraction of the warped cells is swapped for the global
// image vector. Everything runs at latent resolution.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lcsc/embedding.hpp"
#include "lcsc/instruction.hpp"
#include "lcsc/rng.hpp"

namespace lcsc {

/// Channel-major C x H' x W' tensor.
struct LatentControlSignal {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;

  static LatentControlSignal zeros(int channels, int height, int width);

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  float& at(int c, int y, int x) { return values[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  float at(int c, int y, int x) const { return values[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  bool cell_is_zero(int x, int y) const;

  bool operator==(const LatentControlSignal&) const = default;
};

struct LatentCell {
  int x = 0;
  int y = 0;
  bool operator==(const LatentCell&) const = default;
};

/// Half-open box in latent cells.
struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const BoundingBox&) const = default;
};

struct LatentMask {
  int width = 0;
  int height = 0;
  int source_instance = 0;
  std::vector<std::uint8_t> bits;  // height x width

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
};

/// A latent cell is owned by an instance iff the instance covers strictly more
/// than half of the pixels that map onto the cell. Ownership therefore depends
/// only on the instance's own mask and is disjoint across a panoptic set.
/// Cell (x, y) maps to pixel columns [x*W/w', (x+1)*W/w') (at least one pixel).
LatentMask downsample_mask(const InstanceSpec& instance, int latent_width, int latent_height);

/// Tight box around the true cells. Throws DegenerateBox for an empty mask.
BoundingBox bounding_box(const LatentMask& mask);

/// Warnings for instances that own no cell at the given latent size.
std::vector<Violation> latent_warnings(const InstructionSet& instr, int latent_width, int latent_height);

/// Copies `emb` into every true cell. Throws OverlapWrite if a target cell is
/// already nonzero and DimensionMismatch if the channel counts differ.
LatentControlSignal paint(LatentControlSignal lc, const TextEmbedding& emb, const LatentMask& mask);

/// One vector per true mask cell, in row-major cell order.
struct WarpedFeatures {
  int channels = 0;
  std::vector<LatentCell> cells;
  std::vector<float> values;  // cells.size() x channels

  std::span<float> vec(std::size_t k) { return {values.data() + k * channels, static_cast<std::size_t>(channels)}; }
  std::span<const float> vec(std::size_t k) const {
    return {values.data() + k * channels, static_cast<std::size_t>(channels)};
  }
  std::size_t size() const { return cells.size(); }
};

/// Maps each true cell's position inside `box` onto the patch grid
/// (half-pixel centers) and samples it bilinearly with border clamping.
WarpedFeatures spatial_warp(const ImageEmbedding& emb, const LatentMask& mask, const BoundingBox& box);

/// Number of cells replaced for a given rate: round(rate * k).
std::size_t drop_count(double rate, std::size_t k);

/// Replaces exactly drop_count(rate, K) cells, chosen uniformly without
/// replacement, with `global_vec`.
WarpedFeatures drop_replace(WarpedFeatures warped, std::span<const float> global_vec, double rate, Engine& rng);

/// Writes warped vectors into their cells; same overlap rule as paint().
void write_features(LatentControlSignal& lc, const WarpedFeatures& features);

struct ComposeOptions {
  int latent_width = 0;
  int latent_height = 0;
  double drop_rate = 0.10;
};

/// Builds lc for a validated set. Drop-and-replace for instance i draws from
/// seed.derive(i), so the result does not depend on instance order.
LatentControlSignal compose(const InstructionSet& instr, const EmbeddingProvider& provider,
                            const ComposeOptions& options, Seed seed);

}  // namespace lcsc
