// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lcsc {

// std::mt19937_64 is fully specified by the standard; the std distributions are
// not, so every draw below is derived from raw engine output.
using Engine = std::mt19937_64;

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t fnv1a64(std::string_view text);

/// A reproducible seed that can be split into independent streams.
class Seed {
 public:
  constexpr Seed() = default;
  constexpr explicit Seed(std::uint64_t value) : value_(value) {}

  std::uint64_t value() const { return value_; }
  Seed derive(std::uint64_t salt) const { return Seed(hash_combine(value_, salt)); }
  Seed derive(std::string_view salt) const { return derive(fnv1a64(salt)); }
  Engine engine() const { return Engine(mix64(value_)); }

  bool operator==(const Seed&) const = default;

 private:
  std::uint64_t value_ = 0;
};

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Engine& engine);
/// Uniform double in [lo, hi).
double uniform(Engine& engine, double lo, double hi);
/// Unbiased integer in [0, bound); bound must be > 0.
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound);

}  // namespace lcsc
