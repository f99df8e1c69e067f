// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

// Framing shared by external backends and providers.
//
//   "LSWP <version> <op> <payload-length>\n"   ASCII header line
//   <payload-length> bytes of payload:
//     compact JSON header (no raw newlines) "\n"
//     blob_0 blob_1 ...                        sizes listed in header["blobs"]
//
// Blobs carry LSTR tensors. Responses use op | kResponseBit.
namespace latsteer::wire {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kResponseBit = 0x80;

enum class OpCode : std::uint32_t {
  kHello = 1,
  kGenerate = 2,
  kEmbedText = 3,
  kEmbedImage = 4,
  kDetect = 5,
  kError = 0x7f,
};

struct Message {
  std::uint32_t op = 0;
  nlohmann::json header = nlohmann::json::object();
  std::vector<std::string> blobs;

  OpCode opcode() const { return static_cast<OpCode>(op & ~kResponseBit); }
  bool is_response() const { return (op & kResponseBit) != 0; }
};

struct FrameHeader {
  std::uint32_t version = 0;
  std::uint32_t op = 0;
  std::uint64_t payload_length = 0;
};

inline constexpr std::uint64_t kMaxPayload = 1ull << 32;

std::string encode(const Message& m);

// Parses the header line without its trailing newline.
FrameHeader parse_header_line(std::string_view line);
Message decode_payload(std::uint32_t op, std::string_view payload);

// Full frame (header line + payload).
Message decode(std::string_view frame);

Message request(OpCode op, nlohmann::json header = nlohmann::json::object(),
                std::vector<std::string> blobs = {});
Message response_to(const Message& req, nlohmann::json header = nlohmann::json::object(),
                    std::vector<std::string> blobs = {});
Message error_response(const std::string& message, const std::string& code = "backend");

// Throws kBackend carrying the remote message when `m` is an error response.
void throw_if_error(const Message& m);

}  // namespace latsteer::wire
