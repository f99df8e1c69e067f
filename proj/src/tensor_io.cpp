// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/tensor_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace latsteer::tensor_io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "LSTR codec assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

}  // namespace

std::string encode(const LatentTensor& t) {
  if (t.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty tensor");
  std::string out = "LSTR";
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
  for (auto d : t.shape()) put_u32(out, d);
  const auto v = t.values();
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  return out;
}

LatentTensor decode(std::string_view bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::kTruncated, "tensor shorter than its magic");
  if (bytes.substr(0, 4) != "LSTR") throw Error(ErrorCode::kBadMagic, "not an LSTR tensor");
  if (bytes.size() < 9) throw Error(ErrorCode::kTruncated, "tensor header truncated");
  if (static_cast<std::uint8_t>(bytes[4]) != kVersion) {
    throw Error(ErrorCode::kBadVersion,
                "unsupported LSTR version " + std::to_string(static_cast<std::uint8_t>(bytes[4])));
  }
  const std::uint32_t rank = get_u32(bytes, 5);
  std::size_t offset = 9;
  if (rank == 0 || rank > 16) throw Error(ErrorCode::kCorruption, "implausible tensor rank");
  if (bytes.size() < offset + 4ull * rank) throw Error(ErrorCode::kTruncated, "tensor shape truncated");
  Shape shape(rank);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape[i] = get_u32(bytes, offset);
    offset += 4;
    count *= shape[i];
    if (shape[i] == 0 || count > (1ull << 34)) {
      throw Error(ErrorCode::kCorruption, "invalid tensor dimension");
    }
  }
  const std::uint64_t need = offset + count * sizeof(float);
  if (bytes.size() < need) throw Error(ErrorCode::kTruncated, "tensor values truncated");
  if (bytes.size() > need) throw Error(ErrorCode::kCorruption, "trailing bytes after tensor");
  std::vector<float> values(count);
  std::memcpy(values.data(), bytes.data() + offset, count * sizeof(float));
  try {
    return LatentTensor(std::move(values), std::move(shape));
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruption, e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  thread_local std::mt19937_64 gen{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(gen());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename into " + path.string());
  }
}

std::string save_tensor(const LatentTensor& t, const std::filesystem::path& path) {
  const std::string bytes = encode(t);
  write_file_atomic(path, bytes);
  return sha256_hex(bytes);
}

LatentTensor load_tensor(const std::filesystem::path& path) {
  return decode(read_file(path));
}

}  // namespace latsteer::tensor_io
