// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/mixture.hpp"

#include <cmath>
#include <string>

#include "latsteer/error.hpp"

namespace latsteer {

void MixtureSpec::validate() const {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "mixture dim must be positive");
  if (components.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "mixture has no components");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& comp = components[c];
    const std::string where = "component " + std::to_string(c);
    if (!(comp.weight > 0.0 && comp.weight <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, where + ": weight outside (0, 1]");
    }
    if (comp.mean.size() != dim || comp.variance.size() != dim) {
      throw Error(ErrorCode::kInvalidArgument,
                  where + ": mean/variance length differs from dim " + std::to_string(dim));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(comp.mean[j])) {
        throw Error(ErrorCode::kInvalidArgument, where + ": non-finite mean");
      }
      if (!(comp.variance[j] > 0.0) || !std::isfinite(comp.variance[j])) {
        throw Error(ErrorCode::kInvalidArgument, where + ": variance must be positive");
      }
    }
    total += comp.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
}

std::vector<double> MixtureSpec::mean() const {
  std::vector<double> m(dim, 0.0);
  for (const auto& comp : components) {
    for (std::size_t j = 0; j < dim; ++j) m[j] += comp.weight * comp.mean[j];
  }
  return m;
}

std::vector<double> MixtureSpec::covariance() const {
  const auto m = mean();
  std::vector<double> cov(dim * dim, 0.0);
  for (const auto& comp : components) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double di = comp.mean[i] - m[i];
      cov[i * dim + i] += comp.weight * comp.variance[i];
      for (std::size_t j = 0; j < dim; ++j) {
        cov[i * dim + j] += comp.weight * di * (comp.mean[j] - m[j]);
      }
    }
  }
  return cov;
}

MixtureSpec isotropic_mixture(const std::vector<double>& weights,
                              const std::vector<std::vector<double>>& means) {
  if (weights.size() != means.size() || means.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "weights and means differ in count");
  }
  MixtureSpec spec;
  spec.dim = means.front().size();
  for (std::size_t c = 0; c < means.size(); ++c) {
    spec.components.push_back({weights[c], means[c], std::vector<double>(spec.dim, 1.0)});
  }
  spec.validate();
  return spec;
}

}  // namespace latsteer
