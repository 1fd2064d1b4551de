// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/embedding.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "lcsc/error.hpp"
#include "lcsc/rng.hpp"

namespace lcsc {
namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kBlobName = "embeddings.bin";

float stub_value(std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = hash_combine(stream, index);
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return static_cast<float>(2.0 * u - 1.0);
}

std::string squote(std::string_view key) { return "'" + std::string(key) + "'"; }

}  // namespace

// --- StubProvider ----------------------------------------------------------------

StubProvider::StubProvider(int channels, int grid, std::uint64_t seed)
    : EmbeddingProvider(channels, grid), seed_(seed) {}

TextEmbedding StubProvider::get_text(std::string_view key) const {
  const std::uint64_t stream = hash_combine(hash_combine(seed_, fnv1a64("text")), fnv1a64(key));
  TextEmbedding emb;
  emb.values.resize(static_cast<std::size_t>(channels()));
  for (std::size_t i = 0; i < emb.values.size(); ++i) emb.values[i] = stub_value(stream, i);
  return emb;
}

ImageEmbedding StubProvider::get_image(std::string_view key) const {
  const std::uint64_t stream = hash_combine(hash_combine(seed_, fnv1a64("image")), fnv1a64(key));
  ImageEmbedding emb;
  emb.grid = grid();
  emb.channels = channels();
  const std::size_t n = static_cast<std::size_t>(grid()) * grid() * channels();
  emb.spatial.resize(n);
  for (std::size_t i = 0; i < n; ++i) emb.spatial[i] = stub_value(stream, i);
  emb.global_vec.resize(static_cast<std::size_t>(channels()));
  for (std::size_t c = 0; c < emb.global_vec.size(); ++c) emb.global_vec[c] = stub_value(stream, n + c);
  return emb;
}

// --- FileEmbeddingStore -------------------------------------------------------------

std::unique_ptr<FileEmbeddingStore> FileEmbeddingStore::open(const std::filesystem::path& dir, int channels,
                                                             int grid) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + (dir / kManifestName).string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "embedding manifest: " + std::string(e.what()));
  }

  std::unique_ptr<FileEmbeddingStore> store(new FileEmbeddingStore(channels, grid));
  const std::filesystem::path blob_path = dir / manifest.value("blob", std::string(kBlobName));
  const int fd = ::open(blob_path.c_str(), O_RDONLY);
  if (fd < 0) throw Error(ErrorCode::kIoFailure, "cannot open " + blob_path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw Error(ErrorCode::kIoFailure, "cannot stat " + blob_path.string());
  }
  store->blob_size_ = static_cast<std::size_t>(st.st_size);
  if (store->blob_size_ > 0) {
    void* p = ::mmap(nullptr, store->blob_size_, PROT_READ, MAP_PRIVATE, fd, 0);
    if (p == MAP_FAILED) {
      ::close(fd);
      throw Error(ErrorCode::kIoFailure, "cannot map " + blob_path.string());
    }
    store->blob_ = static_cast<const unsigned char*>(p);
  }
  ::close(fd);

  try {
    if (manifest.at("format_version").get<int>() != 1) {
      throw Error(ErrorCode::kVersionUnsupported, "embedding manifest version");
    }
    for (const char* kind : {"text", "image"}) {
      auto& table = std::string_view(kind) == "text" ? store->text_ : store->image_;
      if (!manifest.contains(kind)) continue;
      for (const auto& [key, e] : manifest.at(kind).items()) {
        if (e.value("dtype", std::string("f32")) != "f32") {
          throw Error(ErrorCode::kParseError, "embedding " + squote(key) + " has unsupported dtype");
        }
        Entry entry;
        entry.offset = e.at("offset").get<std::uint64_t>();
        entry.dims = e.at("dims").get<std::vector<std::int64_t>>();
        std::uint64_t count = 1;
        for (auto d : entry.dims) {
          if (d <= 0) throw Error(ErrorCode::kParseError, "embedding " + squote(key) + " has a nonpositive dim");
          count *= static_cast<std::uint64_t>(d);
        }
        if (std::string_view(kind) == "image" && !entry.dims.empty()) count += static_cast<std::uint64_t>(entry.dims.back());
        if (entry.offset + count * 4 > store->blob_size_) {
          throw Error(ErrorCode::kParseError, "embedding " + squote(key) + " extends past the blob");
        }
        table.emplace(key, std::move(entry));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "embedding manifest: " + std::string(e.what()));
  }
  return store;
}

FileEmbeddingStore::~FileEmbeddingStore() {
  if (blob_ != nullptr) ::munmap(const_cast<unsigned char*>(blob_), blob_size_);
}

std::vector<float> FileEmbeddingStore::read_floats(const Entry& entry, std::size_t count) const {
  std::vector<float> out(count);
  const unsigned char* p = blob_ + entry.offset;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    out[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(out[i])) {
      throw Error(ErrorCode::kParseError, "non-finite embedding value at blob offset " +
                                              std::to_string(entry.offset + 4 * i));
    }
  }
  return out;
}

TextEmbedding FileEmbeddingStore::get_text(std::string_view key) const {
  auto it = text_.find(key);
  if (it == text_.end()) throw Error(ErrorCode::kMissingKey, "text embedding " + squote(key));
  const Entry& e = it->second;
  if (e.dims.size() != 1 || e.dims[0] != channels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "text embedding " + squote(key) + " does not have " + std::to_string(channels()) + " channels");
  }
  return TextEmbedding{read_floats(e, static_cast<std::size_t>(channels()))};
}

ImageEmbedding FileEmbeddingStore::get_image(std::string_view key) const {
  auto it = image_.find(key);
  if (it == image_.end()) throw Error(ErrorCode::kMissingKey, "image embedding " + squote(key));
  const Entry& e = it->second;
  if (e.dims.size() != 3 || e.dims[0] != grid() || e.dims[1] != grid() || e.dims[2] != channels()) {
    std::string shape;
    for (auto d : e.dims) shape += (shape.empty() ? "" : "x") + std::to_string(d);
    throw Error(ErrorCode::kDimensionMismatch, "image embedding " + squote(key) + " is " + shape + ", expected " +
                                                   std::to_string(grid()) + "x" + std::to_string(grid()) + "x" +
                                                   std::to_string(channels()));
  }
  const std::size_t n = static_cast<std::size_t>(grid()) * grid() * channels();
  std::vector<float> all = read_floats(e, n + static_cast<std::size_t>(channels()));
  ImageEmbedding emb;
  emb.grid = grid();
  emb.channels = channels();
  emb.global_vec.assign(all.begin() + static_cast<std::ptrdiff_t>(n), all.end());
  all.resize(n);
  emb.spatial = std::move(all);
  return emb;
}

// --- EmbeddingStoreWriter -------------------------------------------------------------

void EmbeddingStoreWriter::add_text(const std::string& key, const TextEmbedding& emb) {
  pending_.push_back({"text", key, {static_cast<std::int64_t>(emb.values.size())}, emb.values});
}

void EmbeddingStoreWriter::add_image(const std::string& key, const ImageEmbedding& emb) {
  if (emb.spatial.size() != static_cast<std::size_t>(emb.grid) * emb.grid * emb.channels ||
      emb.global_vec.size() != static_cast<std::size_t>(emb.channels)) {
    throw Error(ErrorCode::kDimensionMismatch, "image embedding " + squote(key) + " is inconsistent");
  }
  std::vector<float> payload = emb.spatial;
  payload.insert(payload.end(), emb.global_vec.begin(), emb.global_vec.end());
  pending_.push_back({"image", key, {emb.grid, emb.grid, emb.channels}, std::move(payload)});
}

void EmbeddingStoreWriter::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["blob"] = kBlobName;
  manifest["text"] = nlohmann::json::object();
  manifest["image"] = nlohmann::json::object();

  std::ofstream blob(dir / kBlobName, std::ios::binary);
  if (!blob) throw Error(ErrorCode::kIoFailure, "cannot write " + (dir / kBlobName).string());
  std::uint64_t offset = 0;
  for (const Pending& p : pending_) {
    manifest[p.kind][p.key] = {{"offset", offset}, {"dims", p.dims}, {"dtype", "f32"}};
    for (float v : p.payload) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                             static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
      blob.write(bytes, 4);
    }
    offset += p.payload.size() * 4;
  }
  if (!blob) throw Error(ErrorCode::kIoFailure, "short write to " + (dir / kBlobName).string());

  std::ofstream out(dir / kManifestName);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + (dir / kManifestName).string());
}

}  // namespace lcsc
