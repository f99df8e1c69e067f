// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/protocol.hpp"

#include <charconv>

#include "latsteer/error.hpp"

namespace latsteer::wire {

std::string encode(const Message& m) {
  nlohmann::json header = m.header;
  auto sizes = nlohmann::json::array();
  for (const auto& b : m.blobs) sizes.push_back(b.size());
  header["blobs"] = sizes;
  std::string payload = header.dump();
  payload.push_back('\n');
  for (const auto& b : m.blobs) payload += b;
  return "LSWP " + std::to_string(kVersion) + " " + std::to_string(m.op) + " " +
         std::to_string(payload.size()) + "\n" + payload;
}

namespace {

std::uint64_t parse_uint(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::kProtocol, std::string("bad ") + what + " in frame header");
  }
  return v;
}

}  // namespace

FrameHeader parse_header_line(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= line.size()) {
    const auto sp = line.find(' ', start);
    const auto end = sp == std::string_view::npos ? line.size() : sp;
    parts.push_back(line.substr(start, end - start));
    start = end + 1;
    if (sp == std::string_view::npos) break;
  }
  if (parts.size() != 4 || parts[0] != "LSWP") {
    throw Error(ErrorCode::kProtocol, "malformed frame header");
  }
  FrameHeader h;
  h.version = static_cast<std::uint32_t>(parse_uint(parts[1], "version"));
  if (h.version != kVersion) {
    throw Error(ErrorCode::kProtocol, "unsupported protocol version " + std::to_string(h.version));
  }
  h.op = static_cast<std::uint32_t>(parse_uint(parts[2], "op code"));
  h.payload_length = parse_uint(parts[3], "payload length");
  if (h.payload_length > kMaxPayload) throw Error(ErrorCode::kProtocol, "payload too large");
  return h;
}

Message decode_payload(std::uint32_t op, std::string_view payload) {
  const auto nl = payload.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorCode::kProtocol, "payload lacks JSON header");
  Message m;
  m.op = op;
  try {
    m.header = nlohmann::json::parse(payload.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad JSON header: ") + e.what());
  }
  std::size_t offset = nl + 1;
  if (m.header.contains("blobs")) {
    for (const auto& size : m.header.at("blobs")) {
      const auto n = size.get<std::uint64_t>();
      if (offset + n > payload.size()) throw Error(ErrorCode::kProtocol, "blob overruns payload");
      m.blobs.emplace_back(payload.substr(offset, n));
      offset += n;
    }
    m.header.erase("blobs");
  }
  if (offset != payload.size()) throw Error(ErrorCode::kProtocol, "unaccounted payload bytes");
  return m;
}

Message decode(std::string_view frame) {
  const auto nl = frame.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorCode::kProtocol, "frame lacks header line");
  const FrameHeader h = parse_header_line(frame.substr(0, nl));
  const auto payload = frame.substr(nl + 1);
  if (payload.size() != h.payload_length) {
    throw Error(ErrorCode::kProtocol, "payload length mismatch");
  }
  return decode_payload(h.op, payload);
}

Message request(OpCode op, nlohmann::json header, std::vector<std::string> blobs) {
  return Message{static_cast<std::uint32_t>(op), std::move(header), std::move(blobs)};
}

Message response_to(const Message& req, nlohmann::json header, std::vector<std::string> blobs) {
  return Message{req.op | kResponseBit, std::move(header), std::move(blobs)};
}

Message error_response(const std::string& message, const std::string& code) {
  return Message{static_cast<std::uint32_t>(OpCode::kError) | kResponseBit,
                 {{"message", message}, {"code", code}},
                 {}};
}

void throw_if_error(const Message& m) {
  if (m.opcode() == OpCode::kError) {
    throw Error(ErrorCode::kBackend, "remote: " + m.header.value("message", std::string("error")));
  }
}

}  // namespace latsteer::wire
