// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/error.hpp"

namespace latsteer {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kUnsupported: return "unsupported operation";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kBackend: return "backend";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadVersion: return "bad version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kMissingRef: return "missing ref";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kOutOfDistribution: return "out of distribution";
    case ErrorCode::kBusy: return "busy";
  }
  return "unknown";
}

const char* code_id(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kBackend: return "backend";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kBadVersion: return "bad_version";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kMissingRef: return "missing_ref";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kOutOfDistribution: return "out_of_distribution";
    case ErrorCode::kBusy: return "busy";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

bool Error::is_validation() const noexcept {
  switch (code_) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kUnsupported:
      return true;
    default:
      return false;
  }
}

}  // namespace latsteer
