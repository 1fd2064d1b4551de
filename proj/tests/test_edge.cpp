// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "lcsc/edge.hpp"
#include "lcsc/error.hpp"
#include "oracles.hpp"

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

GrayImage vertical_step(int w, int h, int split) {
  GrayImage g(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = split; x < w; ++x) g.at(x, y) = 1.0;
  return g;
}

}  // namespace

TEST_CASE("constant image has no edges") {
  CHECK(sobel_edges(GrayImage(9, 7, 0.4)) == EdgeMap(9, 7, 0));
  CHECK(sobel_edges(GrayImage(1, 1, 1.0)) == EdgeMap(1, 1, 0));
}

TEST_CASE("vertical step marks the two columns beside it") {
  const EdgeMap e = sobel_edges(vertical_step(10, 6, 5));
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 10; ++x) CHECK(e.at(x, y) == ((x == 4 || x == 5) ? 1 : 0));
}

TEST_CASE("single bright pixel stays inside its neighbourhood") {
  GrayImage g(8, 8, 0.0);
  g.at(3, 4) = 1.0;
  const EdgeMap e = sobel_edges(g);
  const auto mag = oracle::sobel_magnitude(g);
  double max_mag = 0;
  for (double m : mag.data) max_mag = std::max(max_mag, m);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (std::abs(x - 3) > 1 || std::abs(y - 4) > 1) CHECK(e.at(x, y) == 0);
      CHECK(e.at(x, y) == (mag.at(x, y) / max_mag >= 0.2 ? 1 : 0));
    }
  }
  CHECK(e.at(3, 4) == 0);  // symmetric neighbourhood, zero gradient
  CHECK(e.at(2, 4) == 1);
}

TEST_CASE("sobel agrees with the kernel oracle on random images") {
  Engine rng = Seed(21).engine();
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(uniform_below(rng, 20));
    const int h = 1 + static_cast<int>(uniform_below(rng, 20));
    GrayImage g(w, h);
    for (double& v : g.data) v = uniform01(rng);
    const auto mag = oracle::sobel_magnitude(g);
    double max_mag = 0;
    for (double m : mag.data) max_mag = std::max(max_mag, m);
    const EdgeMap e = sobel_edges(g, 0.3);
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double r = max_mag > 0 ? mag.data[i] / max_mag : 0.0;
      if (std::abs(r - 0.3) < 1e-9) continue;  // too close to call across summation orders
      CHECK(e.data[i] == (max_mag > 0 && r >= 0.3 ? 1 : 0));
    }
  }
}

TEST_CASE("sobel is mirror symmetric") {
  Engine rng = Seed(22).engine();
  GrayImage g(13, 9);
  for (double& v : g.data) v = uniform01(rng);
  GrayImage flipped(13, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 13; ++x) flipped.at(12 - x, y) = g.at(x, y);
  const EdgeMap a = sobel_edges(g);
  const EdgeMap b = sobel_edges(flipped);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 13; ++x) CHECK(a.at(x, y) == b.at(12 - x, y));
}

TEST_CASE("sobel threshold must lie strictly inside (0, 1)") {
  CHECK(code_of([] { sobel_edges(GrayImage(3, 3), 0.0); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { sobel_edges(GrayImage(3, 3), 1.0); }) == ErrorCode::kConfigError);
}

TEST_CASE("progressive weight endpoints and midpoint") {
  const Schedule s{2.0, 1000};
  CHECK(std::abs(progressive_weight(0, s) - 1.0) <= 1e-12);
  CHECK(std::abs(progressive_weight(1000, s) - 2.0) <= 1e-12);
  CHECK(std::abs(progressive_weight(500, s) - 1.5) <= 1e-12);
  const Schedule odd{3.5, 7};
  double prev = 0;
  for (int t = 0; t <= 7; ++t) {
    const double w = progressive_weight(t, odd);
    const double expected = 1.25 * (1.0 - std::cos(std::numbers::pi * t / 7.0)) + 1.0;
    CHECK(std::abs(w - expected) <= 1e-12);
    CHECK(w >= prev);
    prev = w;
  }
  CHECK(code_of([] { progressive_weight(-1, Schedule{2.0, 10}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { progressive_weight(11, Schedule{2.0, 10}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { progressive_weight(0, Schedule{0.5, 10}); }) == ErrorCode::kConfigError);
  CHECK(code_of([] { progressive_weight(0, Schedule{2.0, 0}); }) == ErrorCode::kConfigError);
}

TEST_CASE("weight maps") {
  const Schedule s{2.0, 100};
  CHECK(weight_map(EdgeMap(5, 4, 0), 37, s) == EdgeWeightMap(5, 4, 1.0f));
  CHECK(weight_map(EdgeMap(5, 4, 1), 100, s) == EdgeWeightMap(5, 4, 2.0f));
  const EdgeMap e = sobel_edges(vertical_step(10, 6, 5));
  const EdgeWeightMap w = weight_map(e, 50, s);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(w.data[i] == (e.data[i] ? 1.5f : 1.0f));
}

TEST_CASE("gray conversion and resize") {
  RgbImage img(2, 1);
  img.at(0, 0, 0) = 1.0f;
  img.at(1, 0, 1) = 1.0f;
  const GrayImage g = to_gray(img);
  CHECK(g.at(0, 0) == doctest::Approx(0.299));
  CHECK(g.at(1, 0) == doctest::Approx(0.587));

  GrayImage src(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) src.at(x, y) = x + 10 * y;
  CHECK(resize_bilinear(src, 4, 4) == src);
  const GrayImage half = resize_bilinear(src, 2, 2);
  CHECK(half.at(0, 0) == doctest::Approx(5.5));
  CHECK(half.at(1, 1) == doctest::Approx(27.5));

  const RgbImage photo = fixture::gradient_image(50, 30, 3);
  CHECK(latent_gray(photo, 7, 5) == resize_bilinear(to_gray(photo), 7, 5));
  CHECK(code_of([] { resize_bilinear(GrayImage(2, 2), 0, 2); }) == ErrorCode::kDimensionMismatch);
}
