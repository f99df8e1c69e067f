// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

// Counter-based normal generator. Every draw is a pure function of
// (seed, step, coordinate); there is no hidden state, so draws can be made
// in any order or from any thread. Byte-level definition in docs/formats.md.
namespace latsteer::rng {

// SplitMix64 finalizer applied to x + 0x9E3779B97F4A7C15.
std::uint64_t mix64(std::uint64_t x) noexcept;

std::uint64_t counter_bits(std::uint64_t seed, std::uint32_t step,
                           std::uint32_t coord, std::uint64_t lane) noexcept;

// Uniform in the open interval (0, 1), 53 bits.
double uniform(std::uint64_t seed, std::uint32_t step, std::uint32_t coord,
               std::uint64_t lane) noexcept;

// Box-Muller on lanes 1 and 2.
double standard_normal(std::uint64_t seed, std::uint32_t step,
                       std::uint32_t coord) noexcept;

// FNV-1a, used to key generators from strings.
std::uint64_t hash_string(const char* data, std::size_t size) noexcept;

}  // namespace latsteer::rng
