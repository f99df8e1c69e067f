// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/rng.hpp"

#include <cmath>
#include <numbers>

namespace latsteer::rng {

std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t counter_bits(std::uint64_t seed, std::uint32_t step,
                           std::uint32_t coord, std::uint64_t lane) noexcept {
  const std::uint64_t key = mix64(seed);
  const std::uint64_t counter =
      (static_cast<std::uint64_t>(step) << 32) | static_cast<std::uint64_t>(coord);
  const std::uint64_t block = mix64(key ^ mix64(counter));
  return mix64(block ^ lane);
}

double uniform(std::uint64_t seed, std::uint32_t step, std::uint32_t coord,
               std::uint64_t lane) noexcept {
  const std::uint64_t bits = counter_bits(seed, step, coord, lane);
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, std::uint32_t step,
                       std::uint32_t coord) noexcept {
  const double u1 = uniform(seed, step, coord, 1);
  const double u2 = uniform(seed, step, coord, 2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t hash_string(const char* data, std::size_t size) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace latsteer::rng
