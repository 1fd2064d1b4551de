// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/lcs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lcsc/error.hpp"

namespace lcsc {
namespace {

struct Span1D {
  int begin;
  int end;
};

// Pixel range covered by latent index i of n over a source extent.
Span1D source_span(int i, int n, int extent) {
  const int begin = static_cast<int>(static_cast<std::int64_t>(i) * extent / n);
  const int end = static_cast<int>(static_cast<std::int64_t>(i + 1) * extent / n);
  return {begin, std::max(end, begin + 1)};
}

void check_cell_free(const LatentControlSignal& lc, int x, int y) {
  if (!lc.cell_is_zero(x, y)) {
    throw Error(ErrorCode::kOverlapWrite,
                "latent cell (" + std::to_string(x) + ", " + std::to_string(y) + ") is already written");
  }
}

}  // namespace

LatentControlSignal LatentControlSignal::zeros(int channels, int height, int width) {
  LatentControlSignal lc;
  lc.channels = channels;
  lc.height = height;
  lc.width = width;
  lc.values.assign(static_cast<std::size_t>(channels) * height * width, 0.0f);
  return lc;
}

bool LatentControlSignal::cell_is_zero(int x, int y) const {
  const std::size_t base = static_cast<std::size_t>(y) * width + x;
  const std::size_t p = plane();
  for (int c = 0; c < channels; ++c) {
    if (values[c * p + base] != 0.0f) return false;
  }
  return true;
}

std::size_t LatentMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

LatentMask downsample_mask(const InstanceSpec& instance, int latent_width, int latent_height) {
  const InstanceMask& mask = instance.mask;
  LatentMask out;
  out.width = latent_width;
  out.height = latent_height;
  out.source_instance = instance.instance_id;
  out.bits.assign(static_cast<std::size_t>(latent_width) * latent_height, 0);
  if (mask.empty() || latent_width <= 0 || latent_height <= 0) return out;

  const PixelBox& b = mask.bounds();
  std::vector<Span1D> cols(static_cast<std::size_t>(latent_width));
  for (int x = 0; x < latent_width; ++x) cols[x] = source_span(x, latent_width, mask.width());

  int x_lo = latent_width, x_hi = 0;
  for (int x = 0; x < latent_width; ++x) {
    if (cols[x].end > b.x0 && cols[x].begin < b.x1) {
      x_lo = std::min(x_lo, x);
      x_hi = x + 1;
    }
  }

  std::vector<std::int64_t> counts(static_cast<std::size_t>(latent_width));
  for (int y = 0; y < latent_height; ++y) {
    const Span1D rows = source_span(y, latent_height, mask.height());
    const int r0 = std::max(rows.begin, b.y0);
    const int r1 = std::min(rows.end, b.y1);
    if (r0 >= r1) continue;
    std::fill(counts.begin(), counts.end(), 0);
    for (int py = r0; py < r1; ++py) {
      const std::uint8_t* row = mask.row(py);
      for (int x = x_lo; x < x_hi; ++x) {
        const int c0 = std::max(cols[x].begin, b.x0);
        const int c1 = std::min(cols[x].end, b.x1);
        for (int px = c0; px < c1; ++px) counts[x] += row[px - b.x0];
      }
    }
    const std::int64_t row_extent = rows.end - rows.begin;
    for (int x = x_lo; x < x_hi; ++x) {
      const std::int64_t area = row_extent * (cols[x].end - cols[x].begin);
      if (2 * counts[x] > area) out.bits[static_cast<std::size_t>(y) * latent_width + x] = 1;
    }
  }
  return out;
}

BoundingBox bounding_box(const LatentMask& mask) {
  BoundingBox box{mask.width, mask.height, 0, 0};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  if (box.x1 <= box.x0 || box.y1 <= box.y0) {
    throw Error(ErrorCode::kDegenerateBox,
                "instance " + std::to_string(mask.source_instance) + " has no latent cells");
  }
  return box;
}

std::vector<Violation> latent_warnings(const InstructionSet& instr, int latent_width, int latent_height) {
  std::vector<Violation> out;
  for (const InstanceSpec& inst : instr.instances()) {
    if (inst.mask.empty()) continue;
    if (downsample_mask(inst, latent_width, latent_height).count() == 0) {
      out.push_back({Violation::Kind::kVanishedAtLatent, Violation::Severity::kWarning, {inst.instance_id},
                     "instance " + std::to_string(inst.instance_id) + " owns no cell at latent " +
                         std::to_string(latent_width) + "x" + std::to_string(latent_height)});
    }
  }
  return out;
}

LatentControlSignal paint(LatentControlSignal lc, const TextEmbedding& emb, const LatentMask& mask) {
  if (emb.values.size() != static_cast<std::size_t>(lc.channels)) {
    throw Error(ErrorCode::kDimensionMismatch, "text embedding has " + std::to_string(emb.values.size()) +
                                                   " channels, lc has " + std::to_string(lc.channels));
  }
  if (mask.width != lc.width || mask.height != lc.height) {
    throw Error(ErrorCode::kDimensionMismatch, "latent mask size differs from lc");
  }
  std::vector<std::size_t> cells;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      check_cell_free(lc, x, y);
      cells.push_back(static_cast<std::size_t>(y) * mask.width + x);
    }
  }
  const std::size_t p = lc.plane();
  for (int c = 0; c < lc.channels; ++c) {
    float* plane = lc.values.data() + c * p;
    const float v = emb.values[c];
    for (std::size_t i : cells) plane[i] = v;
  }
  return lc;
}

WarpedFeatures spatial_warp(const ImageEmbedding& emb, const LatentMask& mask, const BoundingBox& box) {
  const int bw = box.width();
  const int bh = box.height();
  if (bw <= 0 || bh <= 0) throw Error(ErrorCode::kDegenerateBox, "box has zero area");
  const int g = emb.grid;
  const int channels = emb.channels;

  WarpedFeatures out;
  out.channels = channels;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      if (x < box.x0 || x >= box.x1 || y < box.y0 || y >= box.y1) {
        throw Error(ErrorCode::kDegenerateBox, "box does not enclose mask cell (" + std::to_string(x) + ", " +
                                                   std::to_string(y) + ")");
      }
      out.cells.push_back({x, y});
    }
  }
  out.values.resize(out.cells.size() * channels);

  // Sample positions depend only on the column (row) inside the box.
  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [g](int extent) {
    std::vector<Tap> t(static_cast<std::size_t>(extent));
    for (int i = 0; i < extent; ++i) {
      // Multiply before dividing so that extent == g lands exactly on grid centers.
      double pos = (i + 0.5) * g / extent - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(g - 1));
      const int lo = static_cast<int>(std::floor(pos));
      t[i] = {lo, std::min(lo + 1, g - 1), pos - lo};
    }
    return t;
  };
  const std::vector<Tap> tx = taps(bw);
  const std::vector<Tap> ty = taps(bh);

  for (std::size_t k = 0; k < out.cells.size(); ++k) {
    const Tap& ax = tx[out.cells[k].x - box.x0];
    const Tap& ay = ty[out.cells[k].y - box.y0];
    const float* f00 = emb.feature(ax.lo, ay.lo);
    const float* f01 = emb.feature(ax.hi, ay.lo);
    const float* f10 = emb.feature(ax.lo, ay.hi);
    const float* f11 = emb.feature(ax.hi, ay.hi);
    const double w00 = (1.0 - ax.frac) * (1.0 - ay.frac);
    const double w01 = ax.frac * (1.0 - ay.frac);
    const double w10 = (1.0 - ax.frac) * ay.frac;
    const double w11 = ax.frac * ay.frac;
    float* dst = out.values.data() + k * channels;
    for (int c = 0; c < channels; ++c) {
      dst[c] = static_cast<float>(w00 * f00[c] + w01 * f01[c] + w10 * f10[c] + w11 * f11[c]);
    }
  }
  return out;
}

std::size_t drop_count(double rate, std::size_t k) {
  const double r = std::clamp(rate, 0.0, 1.0);
  return std::min(k, static_cast<std::size_t>(std::llround(r * static_cast<double>(k))));
}

WarpedFeatures drop_replace(WarpedFeatures warped, std::span<const float> global_vec, double rate, Engine& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::kConfigError, "drop rate must be in [0, 1]");
  if (global_vec.size() != static_cast<std::size_t>(warped.channels)) {
    throw Error(ErrorCode::kDimensionMismatch, "global vector does not match warped channels");
  }
  const std::size_t k = warped.size();
  const std::size_t r = drop_count(rate, k);
  if (r == 0) return warped;

  // Partial Fisher-Yates: the first r slots end up a uniform r-subset.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, k - i));
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < r; ++i) {
    std::copy(global_vec.begin(), global_vec.end(), warped.vec(order[i]).begin());
  }
  return warped;
}

void write_features(LatentControlSignal& lc, const WarpedFeatures& features) {
  if (features.channels != lc.channels) {
    throw Error(ErrorCode::kDimensionMismatch, "warped features have " + std::to_string(features.channels) +
                                                   " channels, lc has " + std::to_string(lc.channels));
  }
  for (const LatentCell& cell : features.cells) check_cell_free(lc, cell.x, cell.y);
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto v = features.vec(k);
    const LatentCell cell = features.cells[k];
    for (int c = 0; c < lc.channels; ++c) lc.at(c, cell.y, cell.x) = v[c];
  }
}

LatentControlSignal compose(const InstructionSet& instr, const EmbeddingProvider& provider,
                            const ComposeOptions& options, Seed seed) {
  LatentControlSignal lc = LatentControlSignal::zeros(provider.channels(), options.latent_height,
                                                      options.latent_width);
  for (const InstanceSpec& inst : instr.instances()) {
    const LatentMask lmask = downsample_mask(inst, options.latent_width, options.latent_height);
    if (lmask.count() == 0) continue;  // reported by latent_warnings
    const std::string& key = description_key(inst.description);
    if (modality_of(inst.description) == Modality::kText) {
      lc = paint(std::move(lc), provider.get_text(key), lmask);
    } else {
      const ImageEmbedding emb = provider.get_image(key);
      Engine rng = seed.derive(static_cast<std::uint64_t>(inst.instance_id)).engine();
      WarpedFeatures warped = spatial_warp(emb, lmask, bounding_box(lmask));
      write_features(lc, drop_replace(std::move(warped), emb.global_vec, options.drop_rate, rng));
    }
  }
  return lc;
}

}  // namespace lcsc
