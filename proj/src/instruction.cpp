// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/instruction.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "lcsc/error.hpp"

namespace lcsc {

// --- InstanceMask ------------------------------------------------------------

InstanceMask InstanceMask::from_grid(const Grid<std::uint8_t>& full) {
  std::vector<std::uint8_t> bits(full.data.begin(), full.data.end());
  return from_region(full.width, full.height, PixelBox{0, 0, full.width, full.height}, std::move(bits));
}

InstanceMask InstanceMask::from_region(int width, int height, PixelBox region, std::vector<std::uint8_t> bits) {
  if (width < 0 || height < 0 || region.x0 < 0 || region.y0 < 0 || region.x1 > width || region.y1 > height ||
      (!region.empty() && bits.size() != static_cast<std::size_t>(region.width()) * region.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "mask region does not fit the declared image");
  }
  InstanceMask mask;
  mask.width_ = width;
  mask.height_ = height;
  if (region.empty()) return mask;

  PixelBox tight{region.x1, region.y1, region.x0, region.y0};
  std::size_t count = 0;
  for (int y = region.y0; y < region.y1; ++y) {
    const std::uint8_t* row = bits.data() + static_cast<std::size_t>(y - region.y0) * region.width();
    for (int x = region.x0; x < region.x1; ++x) {
      if (!row[x - region.x0]) continue;
      ++count;
      tight.x0 = std::min(tight.x0, x);
      tight.y0 = std::min(tight.y0, y);
      tight.x1 = std::max(tight.x1, x + 1);
      tight.y1 = std::max(tight.y1, y + 1);
    }
  }
  if (count == 0) return mask;

  mask.count_ = count;
  mask.bounds_ = tight;
  if (tight == region) {
    for (auto& b : bits) b = b ? 1 : 0;
    mask.bits_ = std::move(bits);
    return mask;
  }
  mask.bits_.resize(static_cast<std::size_t>(tight.width()) * tight.height());
  for (int y = tight.y0; y < tight.y1; ++y) {
    for (int x = tight.x0; x < tight.x1; ++x) {
      const std::uint8_t b = bits[static_cast<std::size_t>(y - region.y0) * region.width() + (x - region.x0)];
      mask.bits_[static_cast<std::size_t>(y - tight.y0) * tight.width() + (x - tight.x0)] = b ? 1 : 0;
    }
  }
  return mask;
}

Grid<std::uint8_t> InstanceMask::to_grid() const {
  Grid<std::uint8_t> grid(width_, height_, 0);
  for (int y = bounds_.y0; y < bounds_.y1; ++y) {
    const std::uint8_t* r = row(y);
    for (int x = bounds_.x0; x < bounds_.x1; ++x) grid.at(x, y) = r[x - bounds_.x0];
  }
  return grid;
}

// --- descriptions --------------------------------------------------------------

const std::string& description_key(const InstanceDescription& d) {
  return std::visit([](const auto& ref) -> const std::string& { return ref.key; }, d);
}

Modality modality_of(const InstanceDescription& d) {
  return std::holds_alternative<ImageRef>(d) ? Modality::kImage : Modality::kText;
}

// --- InstructionSet --------------------------------------------------------------

std::string to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kOverlap: return "OverlapViolation";
    case Violation::Kind::kEmptyMask: return "EmptyMaskViolation";
    case Violation::Kind::kDuplicateId: return "DuplicateIdViolation";
    case Violation::Kind::kInvalidId: return "InvalidIdViolation";
    case Violation::Kind::kDimension: return "DimensionViolation";
    case Violation::Kind::kInstanceCount: return "InstanceCountViolation";
    case Violation::Kind::kVanishedAtLatent: return "VanishedAtLatentWarning";
  }
  return "Violation";
}

InstructionSet InstructionSet::unchecked(std::string source_id, std::string global_prompt, int image_width,
                                         int image_height, std::vector<InstanceSpec> instances) {
  InstructionSet set;
  set.source_id_ = std::move(source_id);
  set.global_prompt_ = std::move(global_prompt);
  set.image_width_ = image_width;
  set.image_height_ = image_height;
  set.instances_ = std::move(instances);
  return set;
}

InstructionSet InstructionSet::create(std::string source_id, std::string global_prompt, int image_width,
                                      int image_height, std::vector<InstanceSpec> instances, int max_instances) {
  InstructionSet set = unchecked(std::move(source_id), std::move(global_prompt), image_width, image_height,
                                 std::move(instances));
  std::ostringstream problems;
  bool failed = false;
  for (const Violation& v : validate(set, max_instances)) {
    if (v.severity != Violation::Severity::kError) continue;
    problems << (failed ? "; " : "") << v.message;
    failed = true;
  }
  if (failed) {
    throw Error(ErrorCode::kInvalidInstructionSet, "'" + set.source_id_ + "': " + problems.str());
  }
  return set;
}

InstructionSet InstructionSet::with_descriptions(const std::vector<InstanceDescription>& descriptions) const {
  if (descriptions.size() != instances_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "description list does not match instance count");
  }
  InstructionSet copy = *this;
  for (std::size_t i = 0; i < descriptions.size(); ++i) copy.instances_[i].description = descriptions[i];
  return copy;
}

std::vector<Violation> validate(const InstructionSet& instr, int max_instances) {
  std::vector<Violation> out;
  const auto& instances = instr.instances();
  const int n = static_cast<int>(instances.size());
  if (n < 1 || n > max_instances) {
    out.push_back({Violation::Kind::kInstanceCount, Violation::Severity::kError, {},
                   "instance count " + std::to_string(n) + " outside [1, " + std::to_string(max_instances) + "]"});
  }

  std::unordered_set<int> seen;
  for (const InstanceSpec& spec : instances) {
    const int id = spec.instance_id;
    if (id < 1) {
      out.push_back({Violation::Kind::kInvalidId, Violation::Severity::kError, {id},
                     "instance id " + std::to_string(id) + " is not >= 1"});
    }
    if (!seen.insert(id).second) {
      out.push_back({Violation::Kind::kDuplicateId, Violation::Severity::kError, {id},
                     "instance id " + std::to_string(id) + " appears more than once"});
    }
    if (spec.mask.width() != instr.image_width() || spec.mask.height() != instr.image_height()) {
      out.push_back({Violation::Kind::kDimension, Violation::Severity::kError, {id},
                     "instance " + std::to_string(id) + " mask is " + std::to_string(spec.mask.width()) + "x" +
                         std::to_string(spec.mask.height()) + ", image is " + std::to_string(instr.image_width()) +
                         "x" + std::to_string(instr.image_height())});
    }
    if (spec.mask.empty()) {
      out.push_back({Violation::Kind::kEmptyMask, Violation::Severity::kError, {id},
                     "instance " + std::to_string(id) + " has an empty mask"});
    }
  }

  // Pairwise overlap over the union of bounding boxes; owners hold index + 1.
  if (instr.image_width() > 0 && instr.image_height() > 0) {
    Grid<std::int32_t> owner(instr.image_width(), instr.image_height(), 0);
    std::set<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
      const InstanceMask& mask = instances[i].mask;
      if (mask.width() != owner.width || mask.height() != owner.height) continue;
      const PixelBox& b = mask.bounds();
      for (int y = b.y0; y < b.y1; ++y) {
        const std::uint8_t* row = mask.row(y);
        for (int x = b.x0; x < b.x1; ++x) {
          if (!row[x - b.x0]) continue;
          std::int32_t& o = owner.at(x, y);
          if (o != 0) {
            const int a = instances[o - 1].instance_id;
            const int c = instances[i].instance_id;
            pairs.emplace(std::min(a, c), std::max(a, c));
          } else {
            o = i + 1;
          }
        }
      }
    }
    for (const auto& [a, c] : pairs) {
      out.push_back({Violation::Kind::kOverlap, Violation::Severity::kError, {a, c},
                     "instances " + std::to_string(a) + " and " + std::to_string(c) + " overlap"});
    }
  }
  return out;
}

// --- annotation documents ------------------------------------------------------

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

AnnotationDoc parse_annotation(const nlohmann::json& doc) {
  try {
    AnnotationDoc out;
    out.source_id = doc.at("source_id").get<std::string>();
    out.width = doc.at("width").get<int>();
    out.height = doc.at("height").get<int>();
    out.global_prompt = doc.value("global_prompt", std::string());
    out.label_image = doc.value("label_image", std::string());
    out.image = doc.value("image", std::string());
    out.captions = doc.value("captions", std::string());
    for (const auto& s : doc.at("segments")) {
      Segment seg;
      seg.id = s.at("id").get<int>();
      seg.label = s.contains("label") ? s.at("label").get<int>() : seg.id;
      if (s.contains("caption_key")) seg.caption_key = s.at("caption_key").get<std::string>();
      if (s.contains("image_key")) seg.image_key = s.at("image_key").get<std::string>();
      if (s.contains("bbox")) seg.bbox = s.at("bbox").get<std::array<int, 4>>();
      out.segments.push_back(std::move(seg));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("annotation: ") + e.what());
  }
}

AnnotationDoc load_annotation(const std::filesystem::path& path) { return parse_annotation(read_json_file(path)); }

CaptionTable parse_caption_table(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "caption table must be an object");
  CaptionTable table;
  for (const auto& [key, value] : doc.items()) {
    try {
      std::size_t used = 0;
      const int id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
      table[id] = value.get<std::string>();
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "caption table entry '" + key + "' is not id -> string");
    }
  }
  return table;
}

CaptionTable load_caption_table(const std::filesystem::path& path) {
  return parse_caption_table(read_json_file(path));
}

InstructionSet ingest_panoptic_unchecked(const AnnotationDoc& doc, const LabelImage& id_mask,
                                         const CaptionTable& captions) {
  const std::string& sid = doc.source_id;
  if (id_mask.width != doc.width || id_mask.height != doc.height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "'" + sid + "': label image is " + std::to_string(id_mask.width) + "x" +
                    std::to_string(id_mask.height) + ", annotation declares " + std::to_string(doc.width) + "x" +
                    std::to_string(doc.height));
  }

  // Distinct labels get a slot; several segments may name the same label, which
  // surfaces later as an overlap violation.
  constexpr int kNoSlot = -1;
  std::vector<int> slot_of(65536, kNoSlot);
  int slots = 0;
  for (const Segment& seg : doc.segments) {
    if (seg.label < 1 || seg.label > 65535) {
      throw Error(ErrorCode::kParseError, "'" + sid + "': segment " + std::to_string(seg.id) + " has label " +
                                              std::to_string(seg.label) + " outside [1, 65535]");
    }
    if (slot_of[seg.label] == kNoSlot) slot_of[seg.label] = slots++;
  }

  std::vector<PixelBox> boxes(slots, PixelBox{doc.width, doc.height, 0, 0});
  std::vector<std::size_t> counts(slots, 0);
  // Label images are mostly long runs of one label, so work a run at a time.
  const auto run_end = [&](int x, int y, std::uint16_t label) {
    while (x < id_mask.width && id_mask.at(x, y) == label) ++x;
    return x;
  };
  for (int y = 0; y < id_mask.height; ++y) {
    for (int x = 0, x_end = 0; x < id_mask.width; x = x_end) {
      const std::uint16_t label = id_mask.at(x, y);
      x_end = run_end(x + 1, y, label);
      if (label == 0) continue;
      const int s = slot_of[label];
      if (s == kNoSlot) {
        throw Error(ErrorCode::kUnknownLabel, "'" + sid + "': label " + std::to_string(label) + " at (" +
                                                  std::to_string(x) + ", " + std::to_string(y) +
                                                  ") is not declared in the annotation");
      }
      PixelBox& b = boxes[s];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x_end);
      b.y1 = std::max(b.y1, y + 1);
      counts[s] += static_cast<std::size_t>(x_end - x);
    }
  }

  std::vector<std::vector<std::uint8_t>> bits(slots);
  for (int s = 0; s < slots; ++s) {
    if (counts[s] > 0) bits[s].assign(static_cast<std::size_t>(boxes[s].width()) * boxes[s].height(), 0);
  }
  for (int y = 0; y < id_mask.height; ++y) {
    for (int x = 0, x_end = 0; x < id_mask.width; x = x_end) {
      const std::uint16_t label = id_mask.at(x, y);
      x_end = run_end(x + 1, y, label);
      if (label == 0) continue;
      const int s = slot_of[label];
      const PixelBox& b = boxes[s];
      std::fill_n(bits[s].begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(y - b.y0) * b.width() + (x - b.x0)),
                  x_end - x, std::uint8_t{1});
    }
  }

  std::vector<InstanceSpec> instances;
  instances.reserve(doc.segments.size());
  for (const Segment& seg : doc.segments) {
    const int s = slot_of[seg.label];
    if (counts[s] == 0) {
      throw Error(ErrorCode::kEmptyInstance, "'" + sid + "': segment " + std::to_string(seg.id) + " (label " +
                                                 std::to_string(seg.label) + ") has no pixels");
    }
    InstanceSpec spec;
    spec.instance_id = seg.id;
    spec.mask = InstanceMask::from_region(doc.width, doc.height, boxes[s], bits[s]);
    if (auto it = captions.find(seg.id); it != captions.end()) {
      spec.description = TextRef{it->second};
    } else if (seg.caption_key) {
      spec.description = TextRef{*seg.caption_key};
    } else {
      throw Error(ErrorCode::kMissingCaption,
                  "'" + sid + "': segment " + std::to_string(seg.id) + " has no caption");
    }
    spec.image_key = seg.image_key;
    instances.push_back(std::move(spec));
  }
  return InstructionSet::unchecked(doc.source_id, doc.global_prompt, doc.width, doc.height, std::move(instances));
}

InstructionSet ingest_panoptic(const AnnotationDoc& doc, const LabelImage& id_mask, const CaptionTable& captions,
                               int max_instances) {
  InstructionSet set = ingest_panoptic_unchecked(doc, id_mask, captions);
  return InstructionSet::create(set.source_id(), set.global_prompt(), set.image_width(), set.image_height(),
                                set.instances(), max_instances);
}

}  // namespace lcsc
