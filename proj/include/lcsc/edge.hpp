// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "lcsc/grid.hpp"

namespace lcsc {

using EdgeMap = Grid<std::uint8_t>;
/// Per-cell loss weights; 1 off edges, progressive_weight(step) on edges.
using EdgeWeightMap = Grid<float>;

struct Schedule {
  double max_weight = 2.0;        // m
  std::int64_t total_steps = 1;   // n
};

inline constexpr double kDefaultEdgeThreshold = 0.2;

/// Luminance 0.299 R + 0.587 G + 0.114 B.
GrayImage to_gray(const RgbImage& image);

/// Bilinear resize with half-pixel centers and clamped borders.
GrayImage resize_bilinear(const GrayImage& gray, int width, int height);

/// resize_bilinear(to_gray(image), width, height) without materializing the
/// full-resolution gray image. Bit-identical to the two-step form.
GrayImage latent_gray(const RgbImage& image, int width, int height);

/// 3x3 Sobel with reflect-101 borders. A cell is an edge iff its gradient
/// magnitude divided by the maximum magnitude is >= threshold; a constant
/// input has no edges. `threshold` must lie in (0, 1).
EdgeMap sobel_edges(const GrayImage& gray, double threshold = kDefaultEdgeThreshold);

/// (m - 1)/2 * (1 + cos(step/n * pi + pi)) + 1, rising from 1 at step 0 to m at step n.
double progressive_weight(std::int64_t step, const Schedule& schedule);

EdgeWeightMap weight_map(const EdgeMap& edges, std::int64_t step, const Schedule& schedule);

}  // namespace lcsc
