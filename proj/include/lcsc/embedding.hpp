// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lcsc {

inline constexpr int kDefaultGrid = 26;  // 364 px reference / 14 px patches

struct TextEmbedding {
  std::vector<float> values;
};

/// Patch grid (grid x grid x channels, row-major, channel fastest) plus a global vector.
struct ImageEmbedding {
  int grid = 0;
  int channels = 0;
  std::vector<float> spatial;
  std::vector<float> global_vec;

  const float* feature(int gx, int gy) const {
    return spatial.data() + (static_cast<std::size_t>(gy) * grid + gx) * channels;
  }
};

/// Read-only access to precomputed per-instance embeddings. Implementations
/// must be safe for concurrent calls.
class EmbeddingProvider {
 public:
  EmbeddingProvider(int channels, int grid) : channels_(channels), grid_(grid) {}
  virtual ~EmbeddingProvider() = default;

  virtual TextEmbedding get_text(std::string_view key) const = 0;
  virtual ImageEmbedding get_image(std::string_view key) const = 0;

  int channels() const { return channels_; }
  int grid() const { return grid_; }

 private:
  int channels_;
  int grid_;
};

/// Deterministic fixture provider: every value is uniform in [-1, 1] and a pure
/// function of (seed, kind, key, index). Every key resolves.
class StubProvider final : public EmbeddingProvider {
 public:
  StubProvider(int channels, int grid, std::uint64_t seed = 0);

  TextEmbedding get_text(std::string_view key) const override;
  ImageEmbedding get_image(std::string_view key) const override;

 private:
  std::uint64_t seed_;
};

/// Directory store: manifest.json (key -> offset, dims, dtype) plus a flat blob of
/// little-endian f32. The blob is memory-mapped.
class FileEmbeddingStore final : public EmbeddingProvider {
 public:
  static std::unique_ptr<FileEmbeddingStore> open(const std::filesystem::path& dir, int channels, int grid);
  ~FileEmbeddingStore() override;

  TextEmbedding get_text(std::string_view key) const override;
  ImageEmbedding get_image(std::string_view key) const override;

  struct Entry {
    std::uint64_t offset = 0;  // bytes into the blob
    std::vector<std::int64_t> dims;
  };

 private:
  FileEmbeddingStore(int channels, int grid) : EmbeddingProvider(channels, grid) {}
  std::vector<float> read_floats(const Entry& entry, std::size_t count) const;

  std::map<std::string, Entry, std::less<>> text_;
  std::map<std::string, Entry, std::less<>> image_;
  const unsigned char* blob_ = nullptr;
  std::size_t blob_size_ = 0;
};

/// Accumulates embeddings in memory and writes a store directory.
class EmbeddingStoreWriter {
 public:
  void add_text(const std::string& key, const TextEmbedding& emb);
  void add_image(const std::string& key, const ImageEmbedding& emb);
  void write(const std::filesystem::path& dir) const;

 private:
  struct Pending {
    std::string kind;
    std::string key;
    std::vector<std::int64_t> dims;
    std::vector<float> payload;
  };
  std::vector<Pending> pending_;
};

}  // namespace lcsc
