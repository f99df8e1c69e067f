// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "latsteer/core.hpp"

// LSTR binary tensor format:
//   bytes 0-3   magic "LSTR"
//   byte  4     format version (1)
//   bytes 5-8   rank, uint32 little-endian
//   rank x uint32 little-endian dimensions
//   product(dims) x float32 little-endian values
namespace latsteer::tensor_io {

inline constexpr std::uint8_t kVersion = 1;

std::string encode(const LatentTensor& t);

// Throws kBadMagic, kBadVersion, kTruncated, or kCorruption (trailing bytes,
// invalid shape or values).
LatentTensor decode(std::string_view bytes);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

// Writes atomically (temp file + rename) and returns the content hash.
std::string save_tensor(const LatentTensor& t, const std::filesystem::path& path);
LatentTensor load_tensor(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace latsteer::tensor_io
