// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/edge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "lcsc/error.hpp"

namespace lcsc {
namespace {

double luminance(const RgbImage& image, int x, int y) {
  return 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
}

struct Taps {
  int lo, hi;
  double frac;
};

std::vector<Taps> resize_taps(int src, int dst) {
  std::vector<Taps> taps(static_cast<std::size_t>(dst));
  for (int i = 0; i < dst; ++i) {
    double pos = (i + 0.5) * src / dst - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    taps[i] = {lo, std::min(lo + 1, src - 1), pos - lo};
  }
  return taps;
}

template <typename Sample>
GrayImage resize_with(int src_w, int src_h, int width, int height, Sample sample) {
  if (src_w <= 0 || src_h <= 0 || width <= 0 || height <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "resize needs positive sizes");
  }
  const auto tx = resize_taps(src_w, width);
  const auto ty = resize_taps(src_h, height);
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const Taps& ay = ty[y];
    for (int x = 0; x < width; ++x) {
      const Taps& ax = tx[x];
      const double top = (1.0 - ax.frac) * sample(ax.lo, ay.lo) + ax.frac * sample(ax.hi, ay.lo);
      const double bottom = (1.0 - ax.frac) * sample(ax.lo, ay.hi) + ax.frac * sample(ax.hi, ay.hi);
      out.at(x, y) = (1.0 - ay.frac) * top + ay.frac * bottom;
    }
  }
  return out;
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

}  // namespace

GrayImage to_gray(const RgbImage& image) {
  GrayImage gray(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) gray.at(x, y) = luminance(image, x, y);
  }
  return gray;
}

GrayImage resize_bilinear(const GrayImage& gray, int width, int height) {
  return resize_with(gray.width, gray.height, width, height, [&](int x, int y) { return gray.at(x, y); });
}

GrayImage latent_gray(const RgbImage& image, int width, int height) {
  return resize_with(image.width, image.height, width, height,
                     [&](int x, int y) { return luminance(image, x, y); });
}

EdgeMap sobel_edges(const GrayImage& gray, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kConfigError, "edge threshold must lie in (0, 1)");
  }
  const int w = gray.width;
  const int h = gray.height;
  auto p = [&](int x, int y) { return gray.at(reflect101(x, w), reflect101(y, h)); };

  // Each 1D smoothing term is written (a + c) + 2b so a mirrored input yields
  // bit-identical magnitudes.
  Grid<double> magnitude(w, h);
  double max_mag = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double right = (p(x + 1, y - 1) + p(x + 1, y + 1)) + 2.0 * p(x + 1, y);
      const double left = (p(x - 1, y - 1) + p(x - 1, y + 1)) + 2.0 * p(x - 1, y);
      const double below = (p(x - 1, y + 1) + p(x + 1, y + 1)) + 2.0 * p(x, y + 1);
      const double above = (p(x - 1, y - 1) + p(x + 1, y - 1)) + 2.0 * p(x, y - 1);
      const double gx = right - left;
      const double gy = below - above;
      const double m = std::sqrt(gx * gx + gy * gy);
      magnitude.at(x, y) = m;
      max_mag = std::max(max_mag, m);
    }
  }

  EdgeMap edges(w, h, 0);
  if (max_mag <= 0.0) return edges;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges.data[i] = magnitude.data[i] / max_mag >= threshold ? 1 : 0;
  }
  return edges;
}

double progressive_weight(std::int64_t step, const Schedule& schedule) {
  if (schedule.max_weight < 1.0 || schedule.total_steps < 1) {
    throw Error(ErrorCode::kConfigError, "schedule needs m >= 1 and n >= 1");
  }
  if (step < 0 || step > schedule.total_steps) {
    throw Error(ErrorCode::kConfigError, "step " + std::to_string(step) + " outside [0, " +
                                             std::to_string(schedule.total_steps) + "]");
  }
  const double m = schedule.max_weight;
  const double t = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  const double w = (m - 1.0) / 2.0 * (1.0 + std::cos(t * std::numbers::pi + std::numbers::pi)) + 1.0;
  return std::clamp(w, 1.0, m);
}

EdgeWeightMap weight_map(const EdgeMap& edges, std::int64_t step, const Schedule& schedule) {
  const float edge_weight = static_cast<float>(progressive_weight(step, schedule));
  EdgeWeightMap weights(edges.width, edges.height, 1.0f);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges.data[i]) weights.data[i] = edge_weight;
  }
  return weights;
}

}  // namespace lcsc
