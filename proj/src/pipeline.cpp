// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "lcsc/error.hpp"

namespace lcsc {

// --- buckets -------------------------------------------------------------------

Bucket make_bucket(const std::string& ratio_id, int target_height, int snap) {
  const auto colon = ratio_id.find(':');
  Bucket b;
  b.ratio_id = ratio_id;
  try {
    if (colon == std::string::npos) throw std::invalid_argument(ratio_id);
    std::size_t used = 0;
    b.ratio_w = std::stoi(ratio_id.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(ratio_id);
    b.ratio_h = std::stoi(ratio_id.substr(colon + 1), &used);
    if (used != ratio_id.size() - colon - 1) throw std::invalid_argument(ratio_id);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfigError, "bucket ratio '" + ratio_id + "' is not W:H");
  }
  if (b.ratio_w <= 0 || b.ratio_h <= 0 || target_height <= 0 || snap <= 0 || target_height % snap != 0) {
    throw Error(ErrorCode::kConfigError, "bucket '" + ratio_id + "' needs positive ratio and a height that is a "
                                         "multiple of the snap");
  }
  // round(height * W / (H * snap)) in integers, half up
  const std::int64_t num = static_cast<std::int64_t>(target_height) * b.ratio_w;
  const std::int64_t den = static_cast<std::int64_t>(b.ratio_h) * snap;
  const std::int64_t units = std::max<std::int64_t>(1, (2 * num + den) / (2 * den));
  b.target_height = target_height;
  b.target_width = static_cast<int>(units * snap);
  return b;
}

const Bucket& assign_bucket(int width, int height, std::span<const Bucket> buckets) {
  if (buckets.empty()) throw Error(ErrorCode::kConfigError, "bucket list is empty");
  const double log_ratio = std::log(static_cast<double>(width) / static_cast<double>(height));
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const double r = std::log(static_cast<double>(buckets[i].ratio_w) / static_cast<double>(buckets[i].ratio_h));
    const double d = std::abs(log_ratio - r);
    if (d < best_dist - 1e-12) {
      best = i;
      best_dist = d;
    }
  }
  return buckets[best];
}

// --- config ----------------------------------------------------------------------

PipelineConfig default_config() {
  PipelineConfig c;
  for (const char* r : {"1:1", "4:3", "3:4", "16:9", "9:16"}) c.buckets.push_back(make_bucket(r, c.bucket_height, c.bucket_snap));
  return c;
}

PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  static const std::set<std::string> kKeys = {
      "channels", "latent_divisor", "grid", "drop_rate", "p_image", "edge_threshold", "bucket_height",
      "bucket_snap", "buckets", "schedule", "seed", "reference_size", "emit_reference_crops", "max_instances",
      "embeddings"};
  if (!doc.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw Error(ErrorCode::kConfigError, "unknown config key '" + key + "'");
  }

  PipelineConfig c = default_config();
  std::vector<std::string> ratios = {"1:1", "4:3", "3:4", "16:9", "9:16"};
  try {
    c.channels = doc.value("channels", c.channels);
    c.latent_divisor = doc.value("latent_divisor", c.latent_divisor);
    c.grid = doc.value("grid", c.grid);
    c.drop_rate = doc.value("drop_rate", c.drop_rate);
    c.p_image = doc.value("p_image", c.p_image);
    c.edge_threshold = doc.value("edge_threshold", c.edge_threshold);
    c.bucket_height = doc.value("bucket_height", c.bucket_height);
    c.bucket_snap = doc.value("bucket_snap", c.bucket_snap);
    c.seed = doc.value("seed", c.seed);
    c.reference_size = doc.value("reference_size", c.reference_size);
    c.emit_reference_crops = doc.value("emit_reference_crops", c.emit_reference_crops);
    c.max_instances = doc.value("max_instances", c.max_instances);
    if (doc.contains("buckets")) ratios = doc.at("buckets").get<std::vector<std::string>>();
    if (doc.contains("schedule")) {
      const auto& s = doc.at("schedule");
      c.schedule.max_weight = s.value("m", c.schedule.max_weight);
      c.schedule.total_steps = s.value("n", c.schedule.total_steps);
    }
    if (doc.contains("embeddings")) {
      const auto& e = doc.at("embeddings");
      c.embeddings.kind = e.value("kind", c.embeddings.kind);
      c.embeddings.seed = e.value("seed", c.embeddings.seed);
      if (e.contains("path")) {
        std::filesystem::path p = e.at("path").get<std::string>();
        c.embeddings.path = p.is_absolute() ? p : base_dir / p;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }

  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::kConfigError, what);
  };
  require(c.channels >= 1, "channels must be >= 1");
  require(c.latent_divisor >= 1, "latent_divisor must be >= 1");
  require(c.grid >= 1, "grid must be >= 1");
  require(c.drop_rate >= 0.0 && c.drop_rate <= 1.0, "drop_rate must be in [0, 1]");
  require(c.p_image >= 0.0 && c.p_image <= 1.0, "p_image must be in [0, 1]");
  require(c.edge_threshold > 0.0 && c.edge_threshold < 1.0, "edge_threshold must be in (0, 1)");
  require(c.bucket_snap >= 1 && c.bucket_snap % c.latent_divisor == 0,
          "bucket_snap must be a positive multiple of latent_divisor");
  require(c.schedule.max_weight >= 1.0 && c.schedule.total_steps >= 1, "schedule needs m >= 1 and n >= 1");
  require(c.reference_size >= 1, "reference_size must be >= 1");
  require(c.max_instances >= 1, "max_instances must be >= 1");
  require(c.embeddings.kind == "stub" || c.embeddings.kind == "file", "embeddings.kind must be stub or file");
  require(c.embeddings.kind != "file" || !c.embeddings.path.empty(), "file embeddings need a path");
  require(!ratios.empty(), "bucket list is empty");

  c.buckets.clear();
  for (const auto& r : ratios) c.buckets.push_back(make_bucket(r, c.bucket_height, c.bucket_snap));
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

// --- modality selection ---------------------------------------------------------------

std::vector<Modality> select_modalities(const InstructionSet& instr, double p_image, Seed seed) {
  if (!(p_image >= 0.0 && p_image <= 1.0)) throw Error(ErrorCode::kConfigError, "p_image must be in [0, 1]");
  std::vector<Modality> out;
  out.reserve(instr.size());
  for (const InstanceSpec& inst : instr.instances()) {
    if (modality_of(inst.description) == Modality::kImage) {
      out.push_back(Modality::kImage);
      continue;
    }
    if (!inst.image_key) {
      out.push_back(Modality::kText);
      continue;
    }
    Engine rng = seed.derive(static_cast<std::uint64_t>(inst.instance_id)).engine();
    out.push_back(uniform01(rng) < p_image ? Modality::kImage : Modality::kText);
  }
  return out;
}

// --- reference crops -------------------------------------------------------------------

AugmentParams draw_augment(Engine& rng) {
  AugmentParams p;
  p.flip = uniform01(rng) < 0.5;
  p.brightness = uniform(rng, 0.8, 1.2);
  return p;
}

RgbImage crop_reference(const RgbImage& image, const InstanceMask& mask, int size) {
  if (mask.width() != image.width || mask.height() != image.height) {
    throw Error(ErrorCode::kDimensionMismatch, "mask is " + std::to_string(mask.width()) + "x" +
                                                   std::to_string(mask.height()) + ", image is " +
                                                   std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  if (mask.empty()) throw Error(ErrorCode::kEmptyInstance, "reference mask is empty");
  if (size < 1) throw Error(ErrorCode::kConfigError, "reference size must be >= 1");

  const PixelBox& b = mask.bounds();
  auto taps = [](int src, int dst) {
    struct Tap {
      int lo, hi;
      double frac;
    };
    std::vector<Tap> t(static_cast<std::size_t>(dst));
    for (int i = 0; i < dst; ++i) {
      double pos = (i + 0.5) * src / dst - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
      const int lo = static_cast<int>(std::floor(pos));
      t[i] = {lo, std::min(lo + 1, src - 1), pos - lo};
    }
    return t;
  };
  const auto tx = taps(b.width(), size);
  const auto ty = taps(b.height(), size);
  // Background pixels read as zero.
  static constexpr float kZero[3] = {0.0f, 0.0f, 0.0f};
  auto pixel = [&](int cx, int cy) -> const float* {
    const int x = b.x0 + cx;
    const int y = b.y0 + cy;
    return mask.row(y)[cx] ? &image.data[(static_cast<std::size_t>(y) * image.width + x) * 3] : kZero;
  };

  RgbImage out(size, size);
  for (int y = 0; y < size; ++y) {
    const auto& ay = ty[y];
    for (int x = 0; x < size; ++x) {
      const auto& ax = tx[x];
      const float* p00 = pixel(ax.lo, ay.lo);
      const float* p01 = pixel(ax.hi, ay.lo);
      const float* p10 = pixel(ax.lo, ay.hi);
      const float* p11 = pixel(ax.hi, ay.hi);
      float* dst = &out.data[(static_cast<std::size_t>(y) * size + x) * 3];
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - ax.frac) * p00[c] + ax.frac * p01[c];
        const double bottom = (1.0 - ax.frac) * p10[c] + ax.frac * p11[c];
        dst[c] = static_cast<float>((1.0 - ay.frac) * top + ay.frac * bottom);
      }
    }
  }
  return out;
}

RgbImage augment(RgbImage crop, const AugmentParams& params) {
  if (params.flip) {
    for (int y = 0; y < crop.height; ++y) {
      for (int x = 0; x < crop.width / 2; ++x) {
        for (int c = 0; c < 3; ++c) std::swap(crop.at(x, y, c), crop.at(crop.width - 1 - x, y, c));
      }
    }
  }
  if (params.brightness != 1.0) {
    for (float& v : crop.data) v = static_cast<float>(std::clamp(v * params.brightness, 0.0, 1.0));
  }
  return crop;
}

RgbImage extract_reference(const RgbImage& image, const InstanceMask& mask, int size, Engine& rng) {
  const AugmentParams params = draw_augment(rng);
  return augment(crop_reference(image, mask, size), params);
}

// --- compilation -------------------------------------------------------------------------

CompiledSample compile_sample(const InstructionSet& instr, const RgbImage& image, const EmbeddingProvider& provider,
                              const PipelineConfig& config, std::int64_t step, std::uint64_t global_seed) {
  try {
    if (image.width != instr.image_width() || image.height != instr.image_height()) {
      throw Error(ErrorCode::kDimensionMismatch, "image is " + std::to_string(image.width) + "x" +
                                                     std::to_string(image.height) + ", instructions are " +
                                                     std::to_string(instr.image_width()) + "x" +
                                                     std::to_string(instr.image_height()));
    }
    if (provider.channels() != config.channels || provider.grid() != config.grid) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding provider does not match configured channels/grid");
    }

    CompiledSample sample;
    sample.source_id = instr.source_id();
    sample.global_prompt = instr.global_prompt();
    sample.seed = global_seed;
    sample.step = step;
    sample.bucket = assign_bucket(instr.image_width(), instr.image_height(), config.buckets);
    if (sample.bucket.target_width % config.latent_divisor != 0 ||
        sample.bucket.target_height % config.latent_divisor != 0) {
      throw Error(ErrorCode::kConfigError, "bucket " + sample.bucket.ratio_id + " is not divisible by the latent divisor");
    }
    const int lw = sample.bucket.target_width / config.latent_divisor;
    const int lh = sample.bucket.target_height / config.latent_divisor;

    const Seed sample_seed = Seed(global_seed).derive(instr.source_id());
    sample.modalities = select_modalities(instr, config.p_image, sample_seed.derive("modality"));

    std::vector<InstanceDescription> descriptions;
    descriptions.reserve(instr.size());
    for (std::size_t i = 0; i < instr.size(); ++i) {
      const InstanceSpec& inst = instr.instances()[i];
      sample.instance_ids.push_back(inst.instance_id);
      if (sample.modalities[i] == Modality::kImage) {
        descriptions.emplace_back(ImageRef{inst.image_key.value_or(description_key(inst.description))});
      } else {
        descriptions.push_back(inst.description);
      }
    }
    const InstructionSet resolved = instr.with_descriptions(descriptions);

    sample.lc = compose(resolved, provider, ComposeOptions{lw, lh, config.drop_rate}, sample_seed.derive("drop"));
    const EdgeMap edges = sobel_edges(latent_gray(image, lw, lh), config.edge_threshold);
    sample.weight_map = weight_map(edges, step, config.schedule);

    if (config.emit_reference_crops) {
      const Seed aug_seed = sample_seed.derive("augment");
      for (std::size_t i = 0; i < instr.size(); ++i) {
        if (sample.modalities[i] != Modality::kImage) continue;
        const InstanceSpec& inst = instr.instances()[i];
        Engine rng = aug_seed.derive(static_cast<std::uint64_t>(inst.instance_id)).engine();
        sample.reference_crops.emplace_back(inst.instance_id,
                                            extract_reference(image, inst.mask, config.reference_size, rng));
      }
    }
    return sample;
  } catch (const Error& e) {
    throw Error(e.code(), "sample '" + instr.source_id() + "': " + e.detail());
  }
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_bucket(
    std::span<const CompiledSample> samples) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string& id = samples[i].bucket.ratio_id;
    auto [it, inserted] = index.emplace(id, groups.size());
    if (inserted) groups.push_back({id, {}});
    groups[it->second].second.push_back(i);
  }
  return groups;
}

}  // namespace lcsc
