// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "latsteer/metrics.hpp"

namespace latsteer::parallel {

namespace {

BatchItem generate_one(Backend& backend, const PromptSpec& prompt, std::uint64_t seed,
                       const CaptureSet& capture, const SteeringPlan* plan,
                       const GenerateOptions& options) {
  BatchItem item;
  item.seed = seed;
  try {
    item.record = backend.generate(prompt, seed, capture, plan, options);
  } catch (const std::exception& e) {
    item.error = e.what();
  }
  return item;
}

std::vector<const MixtureSpec*> class_mixtures(const AttributeClassifier& classifier) {
  std::vector<const MixtureSpec*> specs;
  for (const auto& c : classifier.classes) specs.push_back(&*c.mixture);
  return specs;
}

std::size_t classify_one(std::span<const MixtureSpec* const> specs, const ImageInput& sample) {
  const auto x = sample.tensor.to_doubles();
  return toy::bayes_argmax(specs, x);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<BatchItem> generate_batch(Backend& backend, const PromptSpec& prompt,
                                      std::span<const std::uint64_t> seeds,
                                      const CaptureSet& capture, const SteeringPlan* plan,
                                      const GenerateOptions& options) {
  if (!backend.concurrent_generate()) {
    throw Error(ErrorCode::kUnsupported, "backend does not allow concurrent generation");
  }
  std::vector<BatchItem> out(seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(seeds.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = generate_one(backend, prompt, seeds[i], capture, plan, options);
  }
  return out;
}

std::vector<std::size_t> classify_batch(const AttributeClassifier& classifier,
                                        std::span<const ImageInput> samples) {
  const auto specs = class_mixtures(classifier);
  std::vector<std::size_t> out(samples.size());
  std::vector<std::string> errors(samples.size());
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = classify_one(specs, samples[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "sample " + std::to_string(i) + ": " + errors[i]);
    }
  }
  return out;
}

namespace reference {

std::vector<BatchItem> generate_batch(Backend& backend, const PromptSpec& prompt,
                                      std::span<const std::uint64_t> seeds,
                                      const CaptureSet& capture, const SteeringPlan* plan,
                                      const GenerateOptions& options) {
  std::vector<BatchItem> out;
  out.reserve(seeds.size());
  for (auto seed : seeds) out.push_back(generate_one(backend, prompt, seed, capture, plan, options));
  return out;
}

std::vector<std::size_t> classify_batch(const AttributeClassifier& classifier,
                                        std::span<const ImageInput> samples) {
  const auto specs = class_mixtures(classifier);
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      out.push_back(classify_one(specs, samples[i]));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, "sample " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace reference
}  // namespace latsteer::parallel
