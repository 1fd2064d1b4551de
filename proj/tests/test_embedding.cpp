// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "lcsc/embedding.hpp"
#include "lcsc/error.hpp"

using namespace lcsc;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lcsc::Error");
  return ErrorCode::kConfigError;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("stub text vectors are keyed and repeatable") {
  const StubProvider p(8, 4, 0);
  const auto a = p.get_text("k1");
  REQUIRE(a.values.size() == 8);
  CHECK(same_bits(a.values, p.get_text("k1").values));
  CHECK(same_bits(a.values, StubProvider(8, 4, 0).get_text("k1").values));
  CHECK_FALSE(same_bits(a.values, p.get_text("k2").values));
  CHECK_FALSE(same_bits(a.values, StubProvider(8, 4, 1).get_text("k1").values));
  for (float v : a.values) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("stub image embeddings have the configured shape") {
  const StubProvider p(8, 4, 3);
  const auto e = p.get_image("img1");
  CHECK(e.grid == 4);
  CHECK(e.channels == 8);
  CHECK(e.spatial.size() == 4 * 4 * 8);
  CHECK(e.global_vec.size() == 8);
  CHECK(same_bits(e.spatial, p.get_image("img1").spatial));
  CHECK(e.feature(1, 2) == e.spatial.data() + (2 * 4 + 1) * 8);
  // Text and image streams for the same key are unrelated.
  CHECK_FALSE(same_bits(p.get_text("img1").values, e.global_vec));
}

TEST_CASE("file store round trips bit-exactly") {
  const auto dir = fixture::scratch_dir("embedding_store");
  TextEmbedding big;
  big.values.resize(1024);
  for (std::size_t i = 0; i < big.values.size(); ++i) big.values[i] = std::ldexp(static_cast<float>(i) - 512.0f, -7);
  big.values[0] = -0.0f;
  big.values[1] = std::numeric_limits<float>::denorm_min();
  big.values[2] = std::numeric_limits<float>::max();
  big.values[3] = -std::numeric_limits<float>::min();

  const StubProvider stub(1024, 26, 9);
  const ImageEmbedding img = stub.get_image("photo");
  EmbeddingStoreWriter writer;
  writer.add_text("caption", big);
  writer.add_image("photo", img);
  writer.add_text("short", TextEmbedding{{1.0f, 2.0f}});
  writer.write(dir);

  const auto store = FileEmbeddingStore::open(dir, 1024, 26);
  CHECK(same_bits(store->get_text("caption").values, big.values));
  const ImageEmbedding back = store->get_image("photo");
  CHECK(same_bits(back.spatial, img.spatial));
  CHECK(same_bits(back.global_vec, img.global_vec));
  CHECK(back.grid == 26);

  CHECK(code_of([&] { store->get_text("absent"); }) == ErrorCode::kMissingKey);
  CHECK(code_of([&] { store->get_image("caption"); }) == ErrorCode::kMissingKey);
  CHECK(code_of([&] { store->get_text("short"); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("file store rejects a grid of the wrong size") {
  const auto dir = fixture::scratch_dir("embedding_grid");
  EmbeddingStoreWriter writer;
  writer.add_image("small", StubProvider(8, 13, 0).get_image("small"));
  writer.write(dir);
  const auto store = FileEmbeddingStore::open(dir, 8, 26);
  try {
    store->get_image("small");
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
    CHECK(std::string(e.what()).find("13x13x8") != std::string::npos);
  }
}

TEST_CASE("file store rejects damaged stores") {
  const auto dir = fixture::scratch_dir("embedding_damaged");
  CHECK(code_of([&] { FileEmbeddingStore::open(dir, 8, 4); }) == ErrorCode::kIoFailure);

  EmbeddingStoreWriter writer;
  writer.add_text("k", TextEmbedding{std::vector<float>(8, 0.5f)});
  writer.write(dir);

  SUBCASE("entry past the blob") {
    std::filesystem::resize_file(dir / "embeddings.bin", 16);
    CHECK(code_of([&] { FileEmbeddingStore::open(dir, 8, 4); }) == ErrorCode::kParseError);
  }
  SUBCASE("non-finite payload") {
    std::fstream blob(dir / "embeddings.bin", std::ios::in | std::ios::out | std::ios::binary);
    const auto bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    const char bytes[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                           static_cast<char>(bits >> 24)};
    blob.seekp(4);
    blob.write(bytes, 4);
    blob.close();
    const auto store = FileEmbeddingStore::open(dir, 8, 4);
    CHECK(code_of([&] { store->get_text("k"); }) == ErrorCode::kParseError);
  }
  SUBCASE("malformed manifest") {
    std::ofstream(dir / "manifest.json") << "{not json";
    CHECK(code_of([&] { FileEmbeddingStore::open(dir, 8, 4); }) == ErrorCode::kParseError);
  }
}
