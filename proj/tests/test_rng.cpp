// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "doctest.h"
#include "lcsc/rng.hpp"

using namespace lcsc;

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("seed derivation is deterministic and salt sensitive") {
  const Seed s(42);
  CHECK(s.derive("drop") == Seed(42).derive("drop"));
  CHECK(s.derive("drop") != s.derive("modality"));
  CHECK(s.derive(1) != s.derive(2));
  CHECK(s.derive(1).derive(2) != s.derive(2).derive(1));
  Engine a = s.engine();
  Engine b = Seed(42).engine();
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("uniform01 stays in [0, 1)") {
  Engine rng = Seed(1).engine();
  double lo = 1, hi = 0, sum = 0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_below covers its range without bias") {
  Engine rng = Seed(2).engine();
  std::vector<int> hist(7, 0);
  constexpr int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = uniform_below(rng, 7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  // 5 sigma of Binomial(70000, 1/7) is about 460.
  for (int h : hist) CHECK(std::abs(h - n / 7) < 460);
  CHECK(uniform_below(rng, 1) == 0);
}
