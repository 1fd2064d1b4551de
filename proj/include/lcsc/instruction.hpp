// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Instance-level instructions: a global prompt plus one (mask, description)
// pair per instance. Masks are stored cropped to their tight bounding box, so
// a 1024x1024 image with many small instances stays cheap to hold and scan.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "lcsc/grid.hpp"

namespace lcsc {

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool operator==(const PixelBox&) const = default;
};

class InstanceMask {
 public:
  InstanceMask() = default;
  /// Builds from a full-image occupancy grid (nonzero = inside).
  static InstanceMask from_grid(const Grid<std::uint8_t>& full);
  /// Builds from bits covering `region` only; `bits` is region.width() * region.height().
  /// The stored bounds are re-tightened, so a loose region is accepted.
  static InstanceMask from_region(int width, int height, PixelBox region, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  /// Tight bounding box of the true pixels; empty for an empty mask.
  const PixelBox& bounds() const { return bounds_; }
  std::size_t pixel_count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool at(int x, int y) const {
    if (x < bounds_.x0 || x >= bounds_.x1 || y < bounds_.y0 || y >= bounds_.y1) return false;
    return bits_[static_cast<std::size_t>(y - bounds_.y0) * bounds_.width() + (x - bounds_.x0)] != 0;
  }
  /// Row of bits inside bounds(); `y` in [bounds().y0, bounds().y1).
  const std::uint8_t* row(int y) const {
    return bits_.data() + static_cast<std::size_t>(y - bounds_.y0) * bounds_.width();
  }

  Grid<std::uint8_t> to_grid() const;

  bool operator==(const InstanceMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  PixelBox bounds_;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct TextRef {
  std::string key;
  bool operator==(const TextRef&) const = default;
};
struct ImageRef {
  std::string key;
  bool operator==(const ImageRef&) const = default;
};
using InstanceDescription = std::variant<TextRef, ImageRef>;

enum class Modality : std::uint8_t { kText, kImage };

const std::string& description_key(const InstanceDescription& d);
Modality modality_of(const InstanceDescription& d);

struct InstanceSpec {
  int instance_id = 0;
  InstanceMask mask;
  InstanceDescription description;
  /// Embedding key of the reference crop copied from the ground-truth image.
  /// Only consulted by random modality selection; absent means text-only.
  std::optional<std::string> image_key;

  bool operator==(const InstanceSpec&) const = default;
};

struct Violation {
  enum class Kind { kOverlap, kEmptyMask, kDuplicateId, kInvalidId, kDimension, kInstanceCount, kVanishedAtLatent };
  enum class Severity { kError, kWarning };

  Kind kind;
  Severity severity = Severity::kError;
  std::vector<int> instance_ids;
  std::string message;
};

std::string to_string(Violation::Kind kind);

inline constexpr int kDefaultMaxInstances = 64;

class InstructionSet {
 public:
  InstructionSet() = default;

  /// Validates and throws Error(kInvalidInstructionSet) listing every error-level violation.
  static InstructionSet create(std::string source_id, std::string global_prompt, int image_width, int image_height,
                               std::vector<InstanceSpec> instances, int max_instances = kDefaultMaxInstances);
  /// Skips validation; for tools and tests that need to inspect malformed sets.
  static InstructionSet unchecked(std::string source_id, std::string global_prompt, int image_width,
                                  int image_height, std::vector<InstanceSpec> instances);

  const std::string& source_id() const { return source_id_; }
  const std::string& global_prompt() const { return global_prompt_; }
  int image_width() const { return image_width_; }
  int image_height() const { return image_height_; }
  const std::vector<InstanceSpec>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }

  /// Copy with descriptions replaced; `descriptions` is parallel to instances().
  InstructionSet with_descriptions(const std::vector<InstanceDescription>& descriptions) const;

  bool operator==(const InstructionSet&) const = default;

 private:
  std::string source_id_;
  std::string global_prompt_;
  int image_width_ = 0;
  int image_height_ = 0;
  std::vector<InstanceSpec> instances_;
};

/// Returns every violated invariant; never throws.
/// Latent-scale warnings live in lcs.hpp (latent_warnings).
std::vector<Violation> validate(const InstructionSet& instr, int max_instances = kDefaultMaxInstances);

// --- panoptic ingest -------------------------------------------------------

struct Segment {
  int id = 0;
  /// Pixel value of this segment in the label image; defaults to id.
  int label = 0;
  std::optional<std::string> caption_key;
  std::optional<std::string> image_key;
  std::optional<std::array<int, 4>> bbox;  // x, y, w, h (informational)
};

struct AnnotationDoc {
  std::string source_id;
  int width = 0;
  int height = 0;
  std::string global_prompt;
  std::vector<Segment> segments;
  // Companion files, relative to the annotation document.
  std::string label_image;
  std::string image;
  std::string captions;
};

using CaptionTable = std::map<int, std::string>;

AnnotationDoc parse_annotation(const nlohmann::json& doc);
AnnotationDoc load_annotation(const std::filesystem::path& path);
CaptionTable parse_caption_table(const nlohmann::json& doc);
CaptionTable load_caption_table(const std::filesystem::path& path);

/// One InstanceSpec per segment, in document order. Text keys come from the caption
/// table, falling back to the segment's caption_key.
InstructionSet ingest_panoptic(const AnnotationDoc& doc, const LabelImage& id_mask, const CaptionTable& captions,
                               int max_instances = kDefaultMaxInstances);
/// ingest_panoptic without the final set-level validation (overlap, count).
InstructionSet ingest_panoptic_unchecked(const AnnotationDoc& doc, const LabelImage& id_mask,
                                         const CaptionTable& captions);

}  // namespace lcsc
