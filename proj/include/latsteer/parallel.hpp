// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latsteer/backend.hpp"

namespace latsteer {
struct AttributeClassifier;
struct ImageInput;
}  // namespace latsteer

// Data-parallel kernels. Each has a serial twin in `reference` that the
// tests compare against bit-for-bit and the benchmark times.
namespace latsteer::parallel {

// Requires backend.concurrent_generate().
std::vector<BatchItem> generate_batch(Backend& backend, const PromptSpec& prompt,
                                      std::span<const std::uint64_t> seeds,
                                      const CaptureSet& capture, const SteeringPlan* plan,
                                      const GenerateOptions& options);

// Bayes-oracle classification of each sample; returns class indices.
std::vector<std::size_t> classify_batch(const AttributeClassifier& classifier,
                                        std::span<const ImageInput> samples);

int max_threads();

namespace reference {

std::vector<BatchItem> generate_batch(Backend& backend, const PromptSpec& prompt,
                                      std::span<const std::uint64_t> seeds,
                                      const CaptureSet& capture, const SteeringPlan* plan,
                                      const GenerateOptions& options);

std::vector<std::size_t> classify_batch(const AttributeClassifier& classifier,
                                        std::span<const ImageInput> samples);

}  // namespace reference
}  // namespace latsteer::parallel
