// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/core.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace latsteer {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

LatentTensor::LatentTensor(std::vector<float> values, Shape shape)
    : values_(std::move(values)), shape_(std::move(shape)) {
  if (shape_.empty()) throw Error(ErrorCode::kInvalidArgument, "tensor shape is empty");
  for (auto d : shape_) {
    if (d == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tensor shape " + shape_to_string(shape_) + " has a zero dimension");
    }
  }
  if (shape_size(shape_) != values_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "shape " + shape_to_string(shape_) + " does not hold " +
                    std::to_string(values_.size()) + " values");
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "tensor has non-finite value");
  }
}

LatentTensor LatentTensor::zeros(const Shape& shape) {
  return LatentTensor(std::vector<float>(shape_size(shape), 0.0f), shape);
}

LatentTensor LatentTensor::from_doubles(std::span<const double> values, const Shape& shape) {
  std::vector<float> v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) v[i] = static_cast<float>(values[i]);
  return LatentTensor(std::move(v), shape);
}

std::vector<double> LatentTensor::to_doubles() const {
  return std::vector<double>(values_.begin(), values_.end());
}

double LatentTensor::l2_norm() const {
  double s = 0.0;
  for (float v : values_) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

bool operator==(const LatentTensor& a, const LatentTensor& b) {
  return a.shape_ == b.shape_ && a.values_.size() == b.values_.size() &&
         (a.values_.empty() ||
          std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0);
}

const char* to_string(PromptRole role) {
  return role == PromptRole::kNeutral ? "neutral" : "target";
}

PromptRole prompt_role_from_string(const std::string& s) {
  if (s == "neutral") return PromptRole::kNeutral;
  if (s == "target") return PromptRole::kTarget;
  throw Error(ErrorCode::kInvalidArgument, "unknown prompt role '" + s + "'");
}

void PromptSpec::validate() const {
  if (id.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt id is empty");
  const bool has_text = !text.empty();
  if (has_text == mixture.has_value()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prompt '" + id + "' must carry exactly one of text or mixture");
  }
  if (mixture) mixture->validate();
}

void Direction::validate(std::optional<std::uint32_t> max_step) const {
  if (vector.empty()) throw Error(ErrorCode::kInvalidArgument, "direction has no vector");
  const double norm = vector.l2_norm();
  // norm of the stored float32 values, accumulated in double
  if (std::abs(norm - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument,
                "direction norm " + std::to_string(norm) + " is not 1");
  }
  if (max_step && train_step > *max_step) {
    throw Error(ErrorCode::kOutOfRange, "direction train step " + std::to_string(train_step) +
                                            " exceeds " + std::to_string(*max_step));
  }
  if (n_per_class < 2) throw Error(ErrorCode::kInvalidArgument, "direction n_per_class < 2");
  if (!(cv_accuracy >= 0.0 && cv_accuracy <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "direction cv_accuracy outside [0, 1]");
  }
}

SteeringPlan::SteeringPlan(std::vector<SteeringTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw Error(ErrorCode::kInvalidArgument, "steering plan is empty");
  for (const auto& t : terms_) {
    if (!t.direction || t.direction->vector.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "steering term without direction");
    }
    if (!std::isfinite(t.weight)) {
      throw Error(ErrorCode::kInvalidArgument, "steering weight is not finite");
    }
    if (t.direction->vector.shape() != terms_.front().direction->vector.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "plan mixes direction shapes " +
                      shape_to_string(terms_.front().direction->vector.shape()) + " and " +
                      shape_to_string(t.direction->vector.shape()));
    }
  }
}

SteeringPlan SteeringPlan::single(const Direction& direction, double weight, std::string ref) {
  return SteeringPlan({{std::make_shared<const Direction>(direction), weight, std::move(ref)}});
}

namespace {

void require_same_shape(const LatentTensor& z, const LatentTensor& d) {
  if (z.shape() != d.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "latent shape " + shape_to_string(z.shape()) +
                                               " vs direction shape " +
                                               shape_to_string(d.shape()));
  }
}

}  // namespace

LatentTensor apply_direction(const LatentTensor& z, const Direction& d, double weight) {
  require_same_shape(z, d.vector);
  const auto zv = z.values();
  const auto dv = d.vector.values();
  std::vector<float> out(zv.size());
  for (std::size_t i = 0; i < zv.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(zv[i]) + weight * static_cast<double>(dv[i]));
  }
  return LatentTensor(std::move(out), z.shape());
}

namespace {

std::vector<double> offset_sum(const SteeringPlan& plan) {
  std::vector<double> acc(shape_size(plan.latent_shape()), 0.0);
  for (const auto& term : plan.terms()) {
    const auto dv = term.direction->vector.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term.weight * static_cast<double>(dv[i]);
  }
  return acc;
}

}  // namespace

LatentTensor apply_plan(const LatentTensor& z, const SteeringPlan& plan) {
  require_same_shape(z, plan.terms().front().direction->vector);
  const auto acc = offset_sum(plan);
  const auto zv = z.values();
  std::vector<float> out(zv.size());
  for (std::size_t i = 0; i < zv.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(zv[i]) + acc[i]);
  }
  return LatentTensor(std::move(out), z.shape());
}

LatentTensor plan_offset(const SteeringPlan& plan) {
  const auto acc = offset_sum(plan);
  return LatentTensor::from_doubles(acc, plan.latent_shape());
}

NormalizedDirection normalize_direction(const LatentTensor& raw) {
  const double norm = raw.l2_norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::kDegenerate, "degenerate direction (zero vector)");
  const auto v = raw.values();
  std::vector<float> unit(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) unit[i] = static_cast<float>(v[i] / norm);
  return {LatentTensor(std::move(unit), raw.shape()), norm};
}

}  // namespace latsteer
