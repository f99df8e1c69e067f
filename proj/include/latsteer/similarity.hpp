// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

namespace latsteer {

// u.v / (|u| |v|), clamped to [-1, 1]. Throws on dimension mismatch or a
// zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace latsteer
