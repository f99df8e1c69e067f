// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latsteer/backend.hpp"
#include "latsteer/providers.hpp"

namespace latsteer {

enum class ClassifierKind { kBayesOracle, kEmbeddingZeroShot };

const char* to_string(ClassifierKind kind);

// One class of an attribute classifier: a mixture for the Bayes oracle, a
// class prompt ("A picture of a woman") for zero-shot classification.
struct ClassSpec {
  std::string label;
  std::optional<MixtureSpec> mixture;
  std::string prompt;

  friend bool operator==(const ClassSpec&, const ClassSpec&) = default;
};

struct AttributeClassifier {
  ClassifierKind kind = ClassifierKind::kBayesOracle;
  std::vector<ClassSpec> classes;
  std::shared_ptr<TextEmbedder> text;     // zero-shot only
  std::shared_ptr<ImageEmbedder> vision;  // zero-shot only

  // >= 2 classes, unique labels, descriptors matching the kind.
  void validate() const;
  std::size_t index_of(const std::string& label) const;
};

using LabelRates = std::map<std::string, double>;

// Class index per sample. Zero-shot picks the class prompt with the highest
// cosine similarity to the image embedding; ties go to the first class.
std::vector<std::size_t> classify_indices(const AttributeClassifier& classifier,
                                          std::span<const ImageInput> samples);

// Fraction of samples per label (every label present, rates sum to 1).
LabelRates classify_all(std::span<const ImageInput> samples, const AttributeClassifier& classifier);

LabelRates rates_from_indices(const AttributeClassifier& classifier,
                              std::span<const std::size_t> indices);

// Statistical parity difference |debiased - baseline|; inputs must be rates.
double spd(double baseline_rate, double debiased_rate);

struct PlanTermSummary {
  std::string direction_ref;
  std::uint32_t train_step = 0;
  double omega = 0.0;

  friend bool operator==(const PlanTermSummary&, const PlanTermSummary&) = default;
};

std::vector<PlanTermSummary> summarize_plan(const SteeringPlan& plan);

struct EvaluationReport {
  std::string prompt_id;
  std::size_t n = 0;
  std::string target_label;
  LabelRates per_label_rate;
  LabelRates baseline_rates;
  double spd = 0.0;
  std::vector<PlanTermSummary> config;
  bool requires_human_evaluation = false;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

struct EvaluateOptions {
  std::uint64_t seed_base = 900000;
  // Baseline rates computed earlier with the same seeds.
  const LabelRates* baseline_cache = nullptr;
  // Complex scenes whose classes do not capture reality get flagged instead
  // of trusted.
  bool requires_human_evaluation = false;
};

// Generates n plan-free and n steered samples on the same seeds, classifies
// both sets and reports SPD on the target label.
EvaluationReport evaluate(Backend& backend, const PromptSpec& prompt, const SteeringPlan& plan,
                          std::size_t n, const AttributeClassifier& classifier,
                          const std::string& target_label, const EvaluateOptions& options = {});

// Multi-column text table, one column per report: prompt, target, baseline
// rate, steered rate, SPD.
std::string format_spd_table(const std::vector<EvaluationReport>& reports);

}  // namespace latsteer
