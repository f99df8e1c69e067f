// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace latsteer {

// One diagonal-covariance Gaussian component.
struct MixtureComponent {
  double weight = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;

  friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

// Gaussian mixture with diagonal covariances. In the toy backend a mixture
// plays the role of a prompt: it is the distribution generations follow.
struct MixtureSpec {
  std::size_t dim = 0;
  std::vector<MixtureComponent> components;

  // Throws kInvalidArgument when weights do not sum to 1 (1e-9), a
  // component has the wrong length, or a variance is non-positive.
  void validate() const;

  // Moments of the mixture, used by the terminal-distribution checks.
  std::vector<double> mean() const;
  std::vector<double> covariance() const;  // dim x dim, row-major

  friend bool operator==(const MixtureSpec&, const MixtureSpec&) = default;
};

// Unit-covariance mixture from weights and means.
MixtureSpec isotropic_mixture(const std::vector<double>& weights,
                              const std::vector<std::vector<double>>& means);

}  // namespace latsteer
