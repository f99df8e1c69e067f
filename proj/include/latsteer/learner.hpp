// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latsteer/backend.hpp"
#include "latsteer/core.hpp"

namespace latsteer {

enum class ClassLabel { kNeutral, kTarget };

struct LatentItem {
  LatentTensor latent;
  ClassLabel label = ClassLabel::kNeutral;
  std::uint64_t seed = 0;

  friend bool operator==(const LatentItem&, const LatentItem&) = default;
};

// Latents captured at one denoising step for a neutral/target prompt pair.
struct LatentDataset {
  std::uint32_t step = 0;
  std::vector<LatentItem> items;
  std::string neutral_id;
  std::string target_id;
  std::string backend_id;

  // >= 2 items per label, one latent length, no duplicate (seed, label).
  void validate() const;
  std::size_t count(ClassLabel label) const;
  std::vector<std::uint64_t> seeds_used() const;

  friend bool operator==(const LatentDataset&, const LatentDataset&) = default;
};

struct SvmOptions {
  double c = 1.0;
  std::uint32_t max_passes = 1000;
  double tolerance = 1e-6;  // on the duality gap, relative to max(1, primal)
};

// Soft-margin linear SVM solved by dual coordinate ascent. The bias is
// learned as the weight of a constant feature equal to the RMS row norm, so
// scaling every row by a > 0 and C by 1 / a^2 scales the solution by 1 / a.
struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double bias_feature = 1.0;  // value of the constant feature
  std::uint32_t passes = 0;
  double duality_gap = 0.0;
  double primal = 0.0;

  double decision(std::span<const double> x) const;
};

// Rows of `x` share one length; labels are +1 / -1. Visits examples in index
// order every pass, so identical inputs give bit-identical models.
LinearSvmModel train_linear_svm(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, const SvmOptions& options);

struct SvmFit {
  std::vector<double> weight_vector;
  double bias = 0.0;
  double c = 1.0;
  double cv_accuracy = 0.0;
  double margin = 0.0;
  std::uint32_t n_iterations = 0;

  friend bool operator==(const SvmFit&, const SvmFit&) = default;
};

struct DirectionFit {
  Direction direction;
  SvmFit fit;
};

inline constexpr std::uint32_t kDefaultFolds = 5;
inline constexpr std::size_t kDefaultPerClass = 50;

// Item i is held out in fold i % folds.
double cross_validate(const LatentDataset& dataset, const SvmOptions& options,
                      std::uint32_t folds = kDefaultFolds);

// Neutral prompt on seeds [seed_base, seed_base + n), target prompt on
// [seed_base + n, seed_base + 2n). One dataset per capture step.
std::map<std::uint32_t, LatentDataset> build_dataset(Backend& backend, const PromptSpec& neutral,
                                                     const PromptSpec& target, std::size_t n,
                                                     const CaptureSet& capture_steps,
                                                     std::uint64_t seed_base);

// Fits the separator and turns its normal into a unit direction pointing
// from neutral towards target latents.
DirectionFit fit_direction(const LatentDataset& dataset, double c, std::int64_t created_at = 0);

std::vector<std::pair<std::uint32_t, double>> separability_profile(
    const std::map<std::uint32_t, LatentDataset>& datasets, double c);

}  // namespace latsteer
