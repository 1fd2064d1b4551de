// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>

#include "doctest.h"
#include "fixtures.hpp"
#include "lcsc/error.hpp"
#include "lcsc/pipeline.hpp"
#include "lcsc/tensor_store.hpp"

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

InstanceMask full_mask(int w, int h) { return InstanceMask::from_grid(Grid<std::uint8_t>(w, h, 1)); }

}  // namespace

TEST_CASE("bucket sizes at the default height") {
  const PipelineConfig c = default_config();
  REQUIRE(c.buckets.size() == 5);
  CHECK(c.buckets[0] == Bucket{"1:1", 1, 1, 1024, 1024});
  CHECK(c.buckets[1].target_width == 1344);
  CHECK(c.buckets[2].target_width == 768);
  CHECK(c.buckets[3].target_width == 1792);
  CHECK(c.buckets[4].target_width == 576);
  for (const Bucket& b : c.buckets) {
    CHECK(b.target_width % 64 == 0);
    CHECK(b.target_height == 1024);
  }
  CHECK(code_of([] { make_bucket("16x9", 1024); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { make_bucket("0:1", 1024); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { make_bucket("1:1", 1000, 64); }) == ErrorCode::kConfigError);
}

TEST_CASE("bucket assignment") {
  const std::vector<Bucket> square_43{make_bucket("1:1", 1024), make_bucket("4:3", 1024)};
  CHECK(assign_bucket(1024, 1024, square_43).ratio_id == "1:1");
  const std::vector<Bucket> square_169{make_bucket("1:1", 1024), make_bucket("16:9", 1024)};
  CHECK(assign_bucket(1920, 1080, square_169).ratio_id == "16:9");
  // 2:1 sits exactly between 1:1 and 4:1 in log space.
  const std::vector<Bucket> tie{make_bucket("1:1", 1024), make_bucket("4:1", 1024)};
  CHECK(assign_bucket(200, 100, tie).ratio_id == "1:1");
  const std::vector<Bucket> tie_rev{make_bucket("4:1", 1024), make_bucket("1:1", 1024)};
  CHECK(assign_bucket(200, 100, tie_rev).ratio_id == "4:1");
  CHECK(code_of([] { assign_bucket(1, 1, {}); }) == ErrorCode::kConfigError);
}

TEST_CASE("config parsing") {
  const PipelineConfig c = parse_config(nlohmann::json::object());
  CHECK(c.channels == 1024);
  CHECK(c.grid == 26);
  CHECK(c.drop_rate == 0.1);
  CHECK(c.schedule.total_steps == 88716);
  CHECK(c.buckets == default_config().buckets);

  const PipelineConfig f = parse_config({{"embeddings", {{"kind", "file"}, {"path", "emb"}}}}, "/data/cfg");
  CHECK(f.embeddings.path == std::filesystem::path("/data/cfg/emb"));

  CHECK(code_of([] { parse_config({{"chanels", 3}}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config({{"drop_rate", 1.5}}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config({{"channels", "many"}}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config({{"buckets", nlohmann::json::array()}}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config({{"embeddings", {{"kind", "file"}}}}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { parse_config({{"bucket_snap", 12}}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == ErrorCode::kConfigError);

  const PipelineConfig small = load_config(fixture::data_dir() / "small_config.json");
  CHECK(small.channels == 16);
  CHECK(small.buckets[0].target_width == 128);
}

TEST_CASE("modality selection") {
  Engine rng = Seed(4).engine();
  const InstructionSet set = fixture::random_set(rng, 64, 64, 8, 0);
  for (auto m : select_modalities(set, 0.0, Seed(1))) CHECK(m == Modality::kText);
  for (auto m : select_modalities(set, 1.0, Seed(1))) CHECK(m == Modality::kImage);
  CHECK(select_modalities(set, 0.5, Seed(1)) == select_modalities(set, 0.5, Seed(1)));

  // Without an image key the draw is always text; an image-only description is always image.
  std::vector<InstanceSpec> specs = set.instances();
  specs[0].image_key.reset();
  specs[1].description = ImageRef{"only"};
  const auto mixed = InstructionSet::create("m", "", 64, 64, specs);
  const auto ms = select_modalities(mixed, 1.0, Seed(2));
  CHECK(ms[0] == Modality::kText);
  CHECK(select_modalities(mixed, 0.0, Seed(2))[1] == Modality::kImage);
  CHECK(code_of([&] { select_modalities(mixed, -0.1, Seed(2)); }) == ErrorCode::kConfigError);
}

TEST_CASE("image fraction over many draws is near p_image") {
  Engine rng = Seed(5).engine();
  const InstructionSet set = fixture::random_set(rng, 64, 64, 10, 0);
  REQUIRE(set.size() >= 5);
  std::size_t images = 0, total = 0;
  for (std::uint64_t s = 0; total < 10000; ++s) {
    for (auto m : select_modalities(set, 0.5, Seed(s))) {
      images += m == Modality::kImage ? 1 : 0;
      ++total;
    }
  }
  CHECK(std::abs(static_cast<double>(images) / total - 0.5) <= 0.02);
}

TEST_CASE("reference crops") {
  RgbImage img(16, 12, 0.5f);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x) img.at(x, y, 0) = static_cast<float>(x) / 15.0f;

  SUBCASE("full mask without augmentation is the resized image") {
    const RgbImage crop = augment(crop_reference(img, full_mask(16, 12), 16), AugmentParams{false, 1.0});
    REQUIRE(crop.width == 16);
    REQUIRE(crop.height == 16);
    CHECK(crop.at(0, 0, 0) == 0.0f);
    CHECK(crop.at(15, 15, 0) == 1.0f);
    CHECK(crop.at(5, 7, 1) == 0.5f);
    const RgbImage same = crop_reference(img, full_mask(16, 12), 16);
    CHECK(crop == same);
  }
  SUBCASE("flip is an involution") {
    const RgbImage crop = crop_reference(img, full_mask(16, 12), 9);
    const AugmentParams flip{true, 1.0};
    CHECK(augment(augment(crop, flip), flip) == crop);
    CHECK_FALSE(augment(crop, flip) == crop);
  }
  SUBCASE("brightness scales and clamps") {
    RgbImage gray(4, 4, 0.5f);
    gray.at(0, 0, 0) = 0.9f;
    const RgbImage bright = augment(gray, AugmentParams{false, 1.2});
    for (std::size_t i = 1; i < bright.data.size(); ++i) CHECK(bright.data[i] == 0.6f);
    CHECK(bright.data[0] == 1.0f);
  }
  SUBCASE("background reads as zero") {
    Grid<std::uint8_t> g(16, 12, 0);
    g.at(2, 2) = 1;
    g.at(3, 3) = 1;
    const RgbImage crop = crop_reference(img, InstanceMask::from_grid(g), 2);
    CHECK(crop.at(1, 0, 1) == 0.0f);
    CHECK(crop.at(0, 0, 1) == 0.5f);
  }
  SUBCASE("bad inputs") {
    CHECK(code_of([&] { crop_reference(img, full_mask(8, 8), 4); }) == ErrorCode::kDimensionMismatch);
    CHECK(code_of([&] { crop_reference(img, InstanceMask::from_grid(Grid<std::uint8_t>(16, 12, 0)), 4); }) ==
          ErrorCode::kEmptyInstance);
  }
  SUBCASE("augmentation draws stay in range") {
    Engine rng = Seed(1).engine();
    int flips = 0;
    for (int i = 0; i < 1000; ++i) {
      const AugmentParams p = draw_augment(rng);
      CHECK(p.brightness >= 0.8);
      CHECK(p.brightness < 1.2);
      flips += p.flip ? 1 : 0;
    }
    CHECK(flips > 400);
    CHECK(flips < 600);
  }
}

TEST_CASE("compiled toy sample matches the pinned golden file") {
  const PipelineConfig config = fixture::toy_config();
  const StubProvider provider(config.channels, config.grid, 0);
  const RgbImage image = fixture::gradient_image(64, 64);
  const CompiledSample sample = compile_sample(fixture::toy_instructions(), image, provider, config, 50, 1234);
  const std::vector<std::uint8_t> bytes = encode_sample(sample);
  CHECK(bytes == encode_sample(compile_sample(fixture::toy_instructions(), image, provider, config, 50, 1234)));

  if (std::getenv("LCSC_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(fixture::golden_path().parent_path());
    write_file_bytes(fixture::golden_path(), bytes);
  }
  REQUIRE(std::filesystem::exists(fixture::golden_path()));
  CHECK(read_file_bytes(fixture::golden_path()) == bytes);

  CHECK(sample.lc.channels == 8);
  CHECK(sample.lc.height == 8);
  CHECK(sample.lc.width == 8);
  CHECK(sample.modalities == std::vector<Modality>{Modality::kText, Modality::kImage});
  REQUIRE(sample.reference_crops.size() == 1);
  CHECK(sample.reference_crops[0].first == 2);
  CHECK(sample.reference_crops[0].second.width == 8);
}

TEST_CASE("the seed changes content, never geometry") {
  PipelineConfig config = fixture::toy_config();
  config.drop_rate = 0.3;
  const StubProvider provider(config.channels, config.grid, 0);
  const RgbImage image = fixture::gradient_image(64, 64);
  const auto a = compile_sample(fixture::toy_instructions(), image, provider, config, 0, 1);
  const auto b = compile_sample(fixture::toy_instructions(), image, provider, config, 0, 2);
  bool any_diff = false;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      CHECK(a.lc.cell_is_zero(x, y) == b.lc.cell_is_zero(x, y));
      for (int c = 0; c < 8; ++c) any_diff = any_diff || a.lc.at(c, y, x) != b.lc.at(c, y, x);
    }
  }
  CHECK(any_diff);
  CHECK(a.weight_map == b.weight_map);
}

TEST_CASE("weight maps at step 0 and step n differ only on edges") {
  const PipelineConfig config = fixture::toy_config();
  const StubProvider provider(config.channels, config.grid, 0);
  const RgbImage image = fixture::gradient_image(64, 64);
  const auto start = compile_sample(fixture::toy_instructions(), image, provider, config, 0, 7);
  const auto end = compile_sample(fixture::toy_instructions(), image, provider, config, 100, 7);
  const EdgeMap edges = sobel_edges(latent_gray(image, 8, 8), config.edge_threshold);
  std::size_t edge_cells = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    CHECK(start.weight_map.data[i] == 1.0f);
    CHECK(end.weight_map.data[i] == (edges.data[i] ? 2.0f : 1.0f));
    edge_cells += edges.data[i];
  }
  CHECK(edge_cells > 0);
  CHECK(start.lc == end.lc);
}

TEST_CASE("compile_sample reports problems with the sample id") {
  const PipelineConfig config = fixture::toy_config();
  const StubProvider provider(config.channels, config.grid, 0);
  try {
    compile_sample(fixture::toy_instructions(), RgbImage(32, 32), provider, config, 0, 0);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
    CHECK(std::string(e.what()).find("sample 'toy'") != std::string::npos);
  }
  const StubProvider wrong(4, config.grid, 0);
  CHECK(code_of([&] {
          compile_sample(fixture::toy_instructions(), fixture::gradient_image(64, 64), wrong, config, 0, 0);
        }) == ErrorCode::kDimensionMismatch);
  CHECK(code_of([&] {
          compile_sample(fixture::toy_instructions(), fixture::gradient_image(64, 64), provider, config, 101, 0);
        }) == ErrorCode::kConfigError);
}

TEST_CASE("samples group by bucket in input order") {
  std::vector<CompiledSample> samples(4);
  samples[0].bucket.ratio_id = "1:1";
  samples[1].bucket.ratio_id = "16:9";
  samples[2].bucket.ratio_id = "1:1";
  samples[3].bucket.ratio_id = "3:4";
  const auto groups = group_by_bucket(samples);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].first == "1:1");
  CHECK(groups[0].second == std::vector<std::size_t>{0, 2});
  CHECK(groups[1].second == std::vector<std::size_t>{1});
  CHECK(groups[2].first == "3:4");
}
