// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compiled sample file layout (all integers little-endian):
//
//   offset 0   8 bytes   magic "LCSC0001"
//   offset 8   u64       manifest length L
//   offset 16  L bytes   manifest, compact UTF-8 JSON:
//                          {"format_version":1,
//                           "metadata":{string: string, ...},
//                           "records":[{"name","dtype":"f32","shape":[...],
//                                       "offset","nbytes"}, ...]}
//   16 + L     payload region; each record is nbytes of row-major f32
//              followed by the CRC32 (u32) of those bytes. Record offsets are
//              relative to the start of the payload region.
//
// See docs/format.md for the record and metadata inventory of a compiled sample.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lcsc/pipeline.hpp"

namespace lcsc {

inline constexpr char kSampleMagic[8] = {'L', 'C', 'S', 'C', '0', '0', '0', '1'};
inline constexpr int kFormatVersion = 1;

struct TensorRecord {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> payload;

  bool operator==(const TensorRecord&) const = default;
};

struct TensorFile {
  std::map<std::string, std::string> metadata;
  std::vector<TensorRecord> records;

  const TensorRecord* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::span<const std::uint8_t> bytes);

TensorFile to_tensor_file(const CompiledSample& sample);
CompiledSample from_tensor_file(const TensorFile& file);

std::vector<std::uint8_t> encode_sample(const CompiledSample& sample);
CompiledSample decode_sample(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames it into place.
void write_sample(const CompiledSample& sample, const std::filesystem::path& path);
CompiledSample read_sample(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lcsc
