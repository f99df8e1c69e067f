// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latsteer/error.hpp"
#include "latsteer/mixture.hpp"

namespace latsteer {

using Shape = std::vector<std::uint32_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Immutable latent state of a diffusion chain. Values are stored as float32;
// arithmetic that combines tensors accumulates in double and rounds once.
class LatentTensor {
 public:
  // Empty placeholder (no shape, no values). Never produced by operations.
  LatentTensor() = default;

  // Throws kInvalidArgument if a dimension is zero, the shape product differs
  // from the value count, or any value is non-finite.
  LatentTensor(std::vector<float> values, Shape shape);

  static LatentTensor zeros(const Shape& shape);
  static LatentTensor from_doubles(std::span<const double> values, const Shape& shape);

  std::span<const float> values() const noexcept { return values_; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  float operator[](std::size_t i) const { return values_[i]; }

  std::vector<double> to_doubles() const;
  double l2_norm() const;

  // Bitwise comparison of shape and values.
  friend bool operator==(const LatentTensor& a, const LatentTensor& b);

 private:
  std::vector<float> values_;
  Shape shape_;
};

enum class PromptRole { kNeutral, kTarget };

const char* to_string(PromptRole role);
PromptRole prompt_role_from_string(const std::string& s);

// A conditioning input. External backends read `text`; the toy backend
// reads `mixture`.
struct PromptSpec {
  std::string id;
  std::string text;
  std::optional<MixtureSpec> mixture;
  PromptRole role = PromptRole::kNeutral;

  // Opaque per-backend sampler settings (guidance scale, negative prompt, ...)
  // forwarded verbatim to external backends.
  std::string sampler_params;

  // Throws unless exactly one of text / mixture is populated.
  void validate() const;

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

// A learned steering vector plus where it came from.
struct Direction {
  LatentTensor vector;              // unit L2 norm
  double bias = 0.0;                // hyperplane offset of the fitted separator
  double raw_norm = 0.0;            // norm of the separator normal before normalizing
  std::uint32_t train_step = 0;
  std::string neutral_id;
  std::string target_id;
  std::uint32_t n_per_class = 0;
  double cv_accuracy = 0.0;
  std::string backend_id;
  std::int64_t created_at = 0;      // unix seconds; not part of the content id

  // Checks the unit-norm (1e-6), step (<= max_step when given), sample-count
  // and accuracy invariants.
  void validate(std::optional<std::uint32_t> max_step = std::nullopt) const;
};

struct SteeringTerm {
  std::shared_ptr<const Direction> direction;
  double weight = 0.0;
  std::string ref;  // artifact id when the direction came from a store
};

// Non-empty linear combination of directions sharing one latent shape.
class SteeringPlan {
 public:
  explicit SteeringPlan(std::vector<SteeringTerm> terms);

  static SteeringPlan single(const Direction& direction, double weight, std::string ref = {});

  const std::vector<SteeringTerm>& terms() const noexcept { return terms_; }
  const Shape& latent_shape() const noexcept { return terms_.front().direction->vector.shape(); }

 private:
  std::vector<SteeringTerm> terms_;
};

// z + weight * d, element-wise. The result is not renormalized.
LatentTensor apply_direction(const LatentTensor& z, const Direction& d, double weight);

// z + sum_i weight_i * d_i.
LatentTensor apply_plan(const LatentTensor& z, const SteeringPlan& plan);

// sum_i weight_i * d_i as a tensor; the payload sent to external backends.
LatentTensor plan_offset(const SteeringPlan& plan);

struct NormalizedDirection {
  LatentTensor unit;
  double norm = 0.0;
};

// Throws kDegenerate for a zero vector.
NormalizedDirection normalize_direction(const LatentTensor& raw);

}  // namespace latsteer
