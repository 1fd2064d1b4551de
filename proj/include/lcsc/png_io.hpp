// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "lcsc/grid.hpp"

namespace lcsc {

/// Reads a single-channel 8- or 16-bit PNG as raw integer labels (no gamma handling).
LabelImage read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelImage& labels);

/// Reads any PNG color type and returns RGB in [0, 1]; alpha is dropped.
RgbImage read_rgb_png(const std::filesystem::path& path);
/// Writes 8-bit RGB, rounding and clamping each value.
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace lcsc
