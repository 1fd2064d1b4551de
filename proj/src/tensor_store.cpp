// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/tensor_store.hpp"

#include <libdeflate.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lcsc/error.hpp"

namespace lcsc {
namespace {

constexpr std::size_t kHeaderSize = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
  return static_cast<std::uint64_t>(get_u32(p)) | (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return libdeflate_crc32(0, data, n);
}

// Payloads are little-endian f32; on little-endian hosts that is the in-memory layout.
void store_floats(std::uint8_t* p, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!values.empty()) std::memcpy(p, values.data(), values.size() * 4);
  } else {
    for (float v : values) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) *p++ = static_cast<std::uint8_t>(bits >> (8 * i));
    }
  }
}

void load_floats(const std::uint8_t* p, std::span<float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!values.empty()) std::memcpy(values.data(), p, values.size() * 4);
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  }
}

std::string range(std::uint64_t from, std::uint64_t to) {
  return "[" + std::to_string(from) + ", " + std::to_string(to) + ")";
}

// Element count of a shape; SerializationOverflow if the byte size does not fit.
std::uint64_t element_count(const TensorRecord& r) {
  std::uint64_t n = 1;
  for (std::uint64_t d : r.shape) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      throw Error(ErrorCode::kSerializationOverflow, "record '" + r.name + "' shape overflows 64-bit sizes");
    }
    n *= d;
  }
  return n;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  if (s.empty()) return parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

const std::string& meta(const TensorFile& file, const std::string& key) {
  auto it = file.metadata.find(key);
  if (it == file.metadata.end()) throw Error(ErrorCode::kParseError, "metadata key '" + key + "' is missing");
  return it->second;
}

template <typename Int>
Int meta_int(const TensorFile& file, const std::string& key) {
  const std::string& text = meta(file, key);
  try {
    std::size_t used = 0;
    const auto v = std::is_signed_v<Int> ? static_cast<Int>(std::stoll(text, &used))
                                         : static_cast<Int>(std::stoull(text, &used));
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "metadata '" + key + "' is not an integer");
  }
}

}  // namespace

const TensorRecord* TensorFile::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_tensor_file(const TensorFile& file) {
  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["metadata"] = file.metadata;
  manifest["records"] = nlohmann::json::array();

  std::set<std::string> names;
  std::uint64_t offset = 0;
  for (const TensorRecord& r : file.records) {
    if (!names.insert(r.name).second) {
      throw Error(ErrorCode::kSerializationOverflow, "duplicate record name '" + r.name + "'");
    }
    const std::uint64_t n = element_count(r);
    if (n != r.payload.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "record '" + r.name + "' payload does not match its shape");
    }
    manifest["records"].push_back(
        {{"name", r.name}, {"dtype", "f32"}, {"shape", r.shape}, {"offset", offset}, {"nbytes", n * 4}});
    offset += n * 4 + 4;
  }

  std::string text;
  try {
    text = manifest.dump();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSerializationOverflow, std::string("manifest: ") + e.what());
  }

  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + text.size() + offset);
  out.resize(8);
  std::memcpy(out.data(), kSampleMagic, 8);
  put_u64(out, text.size());
  out.resize(kHeaderSize + text.size());
  std::memcpy(out.data() + kHeaderSize, text.data(), text.size());
  for (const TensorRecord& r : file.records) {
    const std::size_t start = out.size();
    out.resize(start + r.payload.size() * 4);
    store_floats(out.data() + start, r.payload);
    put_u32(out, crc_of(out.data() + start, r.payload.size() * 4));
  }
  return out;
}

TensorFile decode_tensor_file(std::span<const std::uint8_t> bytes) {
  const std::uint64_t size = bytes.size();
  if (size < kHeaderSize) {
    throw Error(ErrorCode::kParseError, "truncated header: missing bytes " + range(size, kHeaderSize));
  }
  if (std::memcmp(bytes.data(), kSampleMagic, 4) != 0) throw Error(ErrorCode::kBadMagic, "not a compiled sample");
  if (std::memcmp(bytes.data(), kSampleMagic, 8) != 0) {
    throw Error(ErrorCode::kVersionUnsupported,
                "magic " + std::string(reinterpret_cast<const char*>(bytes.data()), 8) + " is not LCSC0001");
  }
  const std::uint64_t manifest_len = get_u64(bytes.data() + 8);
  if (manifest_len > size - kHeaderSize) {
    throw Error(ErrorCode::kParseError,
                "truncated manifest: missing bytes " + range(size, kHeaderSize + manifest_len));
  }
  const std::uint64_t payload_start = kHeaderSize + manifest_len;

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + kHeaderSize, bytes.begin() + static_cast<std::ptrdiff_t>(payload_start));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest: ") + e.what());
  }

  TensorFile file;
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kVersionUnsupported,
                  "format_version " + manifest.at("format_version").dump() + " is not supported");
    }
    file.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();

    std::uint64_t next = 0;
    std::set<std::string> names;
    for (const auto& rec : manifest.at("records")) {
      TensorRecord r;
      r.name = rec.at("name").get<std::string>();
      if (rec.at("dtype").get<std::string>() != "f32") {
        throw Error(ErrorCode::kParseError, "record '" + r.name + "' has unsupported dtype");
      }
      r.shape = rec.at("shape").get<std::vector<std::uint64_t>>();
      const std::uint64_t offset = rec.at("offset").get<std::uint64_t>();
      const std::uint64_t nbytes = rec.at("nbytes").get<std::uint64_t>();
      if (!names.insert(r.name).second) throw Error(ErrorCode::kParseError, "duplicate record '" + r.name + "'");
      if (element_count(r) * 4 != nbytes) {
        throw Error(ErrorCode::kParseError, "record '" + r.name + "' nbytes does not match its shape");
      }
      if (offset < next) throw Error(ErrorCode::kParseError, "record '" + r.name + "' overlaps its predecessor");
      const std::uint64_t begin = payload_start + offset;
      const std::uint64_t end = begin + nbytes + 4;
      if (end > size) {
        throw Error(ErrorCode::kParseError, "truncated record '" + r.name + "': missing bytes " + range(size, end));
      }
      const std::uint8_t* p = bytes.data() + begin;
      if (crc_of(p, nbytes) != get_u32(p + nbytes)) {
        throw Error(ErrorCode::kChecksumMismatch, "record '" + r.name + "' failed its CRC32 check");
      }
      r.payload.resize(nbytes / 4);
      load_floats(p, r.payload);
      next = offset + nbytes + 4;
      file.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest: ") + e.what());
  }
  return file;
}

TensorFile to_tensor_file(const CompiledSample& s) {
  TensorFile file;
  std::vector<std::string> modalities;
  for (Modality m : s.modalities) modalities.push_back(m == Modality::kImage ? "image" : "text");
  std::string mod_text;
  for (std::size_t i = 0; i < modalities.size(); ++i) mod_text += (i ? "," : "") + modalities[i];

  file.metadata = {
      {"source_id", s.source_id},
      {"global_prompt", s.global_prompt},
      {"seed", std::to_string(s.seed)},
      {"step", std::to_string(s.step)},
      {"bucket", s.bucket.ratio_id},
      {"bucket_width", std::to_string(s.bucket.target_width)},
      {"bucket_height", std::to_string(s.bucket.target_height)},
      {"instance_ids", join_ints(s.instance_ids)},
      {"modalities", mod_text},
  };

  const auto u = [](int v) { return static_cast<std::uint64_t>(v); };
  file.records.push_back({"lc", {u(s.lc.channels), u(s.lc.height), u(s.lc.width)}, s.lc.values});
  file.records.push_back({"weight_map", {u(s.weight_map.height), u(s.weight_map.width)}, s.weight_map.data});
  for (const auto& [id, crop] : s.reference_crops) {
    file.records.push_back({"ref_crop_" + std::to_string(id), {u(crop.height), u(crop.width), 3}, crop.data});
  }
  return file;
}

CompiledSample from_tensor_file(const TensorFile& file) {
  CompiledSample s;
  s.source_id = meta(file, "source_id");
  s.global_prompt = meta(file, "global_prompt");
  s.seed = meta_int<std::uint64_t>(file, "seed");
  s.step = meta_int<std::int64_t>(file, "step");
  s.bucket.ratio_id = meta(file, "bucket");
  s.bucket.target_width = meta_int<int>(file, "bucket_width");
  s.bucket.target_height = meta_int<int>(file, "bucket_height");
  {
    const auto colon = s.bucket.ratio_id.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kParseError, "bucket id is not W:H");
    try {
      s.bucket.ratio_w = std::stoi(s.bucket.ratio_id.substr(0, colon));
      s.bucket.ratio_h = std::stoi(s.bucket.ratio_id.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "bucket id is not W:H");
    }
  }
  try {
    for (const auto& id : split(meta(file, "instance_ids"), ',')) s.instance_ids.push_back(std::stoi(id));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError, "instance_ids is not a list of integers");
  }
  for (const auto& m : split(meta(file, "modalities"), ',')) {
    if (m == "image") {
      s.modalities.push_back(Modality::kImage);
    } else if (m == "text") {
      s.modalities.push_back(Modality::kText);
    } else {
      throw Error(ErrorCode::kParseError, "unknown modality '" + m + "'");
    }
  }
  if (s.modalities.size() != s.instance_ids.size()) {
    throw Error(ErrorCode::kParseError, "modality record length differs from instance count");
  }

  const TensorRecord* lc = file.find("lc");
  const TensorRecord* wm = file.find("weight_map");
  if (!lc || lc->shape.size() != 3) throw Error(ErrorCode::kParseError, "record 'lc' missing or not rank 3");
  if (!wm || wm->shape.size() != 2) throw Error(ErrorCode::kParseError, "record 'weight_map' missing or not rank 2");
  s.lc.channels = static_cast<int>(lc->shape[0]);
  s.lc.height = static_cast<int>(lc->shape[1]);
  s.lc.width = static_cast<int>(lc->shape[2]);
  s.lc.values = lc->payload;
  s.weight_map.height = static_cast<int>(wm->shape[0]);
  s.weight_map.width = static_cast<int>(wm->shape[1]);
  s.weight_map.data = wm->payload;
  if (s.weight_map.height != s.lc.height || s.weight_map.width != s.lc.width) {
    throw Error(ErrorCode::kParseError, "lc and weight_map latent sizes differ");
  }

  const std::string prefix = "ref_crop_";
  for (const TensorRecord& r : file.records) {
    if (r.name.rfind(prefix, 0) != 0) continue;
    if (r.shape.size() != 3 || r.shape[2] != 3) throw Error(ErrorCode::kParseError, "'" + r.name + "' is not HxWx3");
    RgbImage crop;
    crop.height = static_cast<int>(r.shape[0]);
    crop.width = static_cast<int>(r.shape[1]);
    crop.data = r.payload;
    try {
      s.reference_crops.emplace_back(std::stoi(r.name.substr(prefix.size())), std::move(crop));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "bad record name '" + r.name + "'");
    }
  }
  return s;
}

std::vector<std::uint8_t> encode_sample(const CompiledSample& sample) {
  return encode_tensor_file(to_tensor_file(sample));
}

CompiledSample decode_sample(std::span<const std::uint8_t> bytes) {
  return from_tensor_file(decode_tensor_file(bytes));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::kIoFailure, "short read from " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot move " + tmp.string() + " into place: " + ec.message());
}

void write_sample(const CompiledSample& sample, const std::filesystem::path& path) {
  write_file_bytes(path, encode_sample(sample));
}

CompiledSample read_sample(const std::filesystem::path& path) { return decode_sample(read_file_bytes(path)); }

}  // namespace lcsc
