// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "latsteer/core.hpp"
#include "latsteer/mixture.hpp"

namespace latsteer {

using CaptureSet = std::set<std::uint32_t>;

// One generation: snapshot i is the latent after i reverse steps
// (i = 0 is the initial Gaussian latent, i = k the final one).
struct TrajectoryRecord {
  std::string prompt_id;
  std::uint64_t seed = 0;
  std::map<std::uint32_t, LatentTensor> snapshots;
  LatentTensor final_sample;
  std::string image_ref;  // external backends: content-addressed image path

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

namespace toy {

// Variance-preserving schedule indexed in reverse-time order:
// alpha_bar[0] is the pure-noise end, alpha_bar[k] the data end.
struct Schedule {
  std::uint32_t k = 0;
  std::vector<double> alpha_bar;
  // Euler substeps per reverse step, on a grid linear in log-SNR.
  std::uint32_t substeps = 10;

  void validate() const;

  static Schedule log_snr_linear(std::uint32_t k, double alpha_min = 1e-4,
                                 double alpha_max = 1.0 - 1e-4, std::uint32_t substeps = 10);

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// Time-t marginal of the forward process: means scale by sqrt(alpha_bar),
// variances become alpha_bar * var + (1 - alpha_bar). Weights unchanged.
MixtureSpec marginal_params(const MixtureSpec& spec, double alpha_bar);

// Log-density of the time-t marginal at x.
double log_density(const MixtureSpec& spec, std::span<const double> x, double alpha_bar = 1.0);

// Exact score of the time-t marginal at x.
std::vector<double> mixture_score(const MixtureSpec& spec, std::span<const double> x,
                                  double alpha_bar);

// z_T ~ N(0, I) from the counter-based generator (step 0, coordinate j).
LatentTensor draw_initial_latent(const Shape& shape, std::uint64_t seed);

// Deterministic probability-flow reverse pass from `initial`.
TrajectoryRecord run_reverse(const MixtureSpec& spec, const Schedule& schedule,
                             const LatentTensor& initial, const CaptureSet& capture,
                             std::string prompt_id, std::uint64_t seed);

// Draws z_T, adds `initial_offset` when given, then runs the reverse pass.
TrajectoryRecord sample_trajectory(const MixtureSpec& spec, const Schedule& schedule,
                                   std::uint64_t seed, const CaptureSet& capture,
                                   const LatentTensor* initial_offset = nullptr,
                                   std::string prompt_id = {});

enum class BayesLabel { kA, kB };

// Maximum data-space likelihood between two mixtures; ties go to kA.
BayesLabel bayes_classify(const MixtureSpec& a, const MixtureSpec& b, std::span<const double> x);

// Multi-class version; ties go to the lowest index.
std::size_t bayes_argmax(std::span<const MixtureSpec* const> specs, std::span<const double> x);

}  // namespace toy
}  // namespace latsteer
