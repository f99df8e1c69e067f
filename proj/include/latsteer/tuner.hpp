// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "latsteer/backend.hpp"
#include "latsteer/metrics.hpp"

namespace latsteer {

// Gaussian fit used for Frechet distances.
struct GaussianStats {
  std::vector<double> mean;
  std::vector<double> covariance;  // dim x dim, row-major
  std::size_t n = 0;

  std::size_t dim() const { return mean.size(); }

  // Symmetric within 1e-9, n >= 2, sizes consistent.
  void validate() const;

  // Sample mean and unbiased covariance of the rows.
  static GaussianStats from_samples(const std::vector<std::vector<double>>& rows);

  friend bool operator==(const GaussianStats&, const GaussianStats&) = default;
};

// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}). The trace of the
// square root is taken as Tr sqrt(S_a^{1/2} S_b S_a^{1/2}) with
// eigendecompositions; negative eigenvalues are clamped to 0.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// Feature rows for Frechet statistics: raw final samples, or embeddings
// when an embedder is given.
std::vector<std::vector<double>> sample_features(const std::vector<TrajectoryRecord>& records,
                                                 ImageEmbedder* embedder = nullptr);

double zero_shot_rate(std::span<const ImageInput> samples, const AttributeClassifier& classifier,
                      const std::string& target_label);

struct SweepResult {
  std::uint32_t step = 0;
  double omega = 0.0;
  std::optional<double> frechet;
  double target_rate = 0.0;
  std::size_t n_eval = 0;
  bool valid = true;

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

inline constexpr double kDefaultGateFactor = 3.0;
inline constexpr std::size_t kDefaultEvalSamples = 50;
inline constexpr std::size_t kMinEvalSeeds = 10;

// {0, 2, ..., 40}.
std::vector<double> default_omega_grid();

struct SweepConfig {
  std::vector<double> omega_grid = default_omega_grid();
  std::vector<std::uint64_t> eval_seeds;
  std::string target_label;
  // Feature statistics of known-debiased samples. Without it frechet is
  // absent and every cell counts as valid.
  std::optional<GaussianStats> reference;
  // A cell is valid when frechet <= gate_factor * (baseline vs reference).
  double gate_factor = kDefaultGateFactor;
  ImageEmbedder* feature_embedder = nullptr;
};

struct SweepOutcome {
  std::vector<SweepResult> results;  // (step, omega) ascending
  double baseline_rate = 0.0;
  std::optional<double> baseline_frechet;
  std::optional<double> gate;

  friend bool operator==(const SweepOutcome&, const SweepOutcome&) = default;
};

// Scores every (step, omega) cell by generating the neutral prompt on the
// eval seeds with that step's direction at weight omega.
SweepOutcome sweep(Backend& backend, const PromptSpec& neutral,
                   const std::map<std::uint32_t, Direction>& directions,
                   const std::vector<std::uint32_t>& steps, const AttributeClassifier& classifier,
                   const SweepConfig& config);

enum class SelectionPolicy { kMaxRateGated, kMinFrechet };

const char* to_string(SelectionPolicy policy);
SelectionPolicy selection_policy_from_string(const std::string& s);

// kMaxRateGated: highest target rate among valid cells, then lower frechet,
// lower omega, lower step. kMinFrechet: lowest frechet among valid cells,
// then higher rate, lower omega, lower step. Throws kOutOfDistribution when
// nothing is valid.
SweepResult select_config(const std::vector<SweepResult>& results, SelectionPolicy policy);

// A sweep with the context needed to reproduce it; the unit the store
// persists.
struct SweepTable {
  std::string prompt_id;
  std::string target_label;
  std::map<std::uint32_t, std::string> direction_refs;  // step -> direction id
  SweepOutcome outcome;
  SelectionPolicy policy = SelectionPolicy::kMaxRateGated;
  std::optional<SweepResult> selected;

  friend bool operator==(const SweepTable&, const SweepTable&) = default;
};

}  // namespace latsteer
