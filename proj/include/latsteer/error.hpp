// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace latsteer {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kDegenerate,
  kOutOfRange,
  kUnsupported,
  kTransport,
  kTimeout,
  kProtocol,
  kBackend,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kCorruption,
  kMissingRef,
  kNotFound,
  kIo,
  kOutOfDistribution,
  kBusy,
};

const char* to_string(ErrorCode code);
// Stable snake_case identifier, e.g. "not_found"; used in API error bodies.
const char* code_id(ErrorCode code);

// All library failures surface as Error; the code distinguishes the kinds
// callers are expected to branch on (CLI exit codes, HTTP statuses).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

  // True for failures caused by bad caller input rather than runtime state.
  bool is_validation() const noexcept;

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace latsteer
