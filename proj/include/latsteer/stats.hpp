// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace latsteer::stats {

// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Returns 0 when either side is
// constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace latsteer::stats
