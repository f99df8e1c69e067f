// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "latsteer/parallel.hpp"
#include "latsteer/similarity.hpp"

namespace latsteer {

const char* to_string(ClassifierKind kind) {
  return kind == ClassifierKind::kBayesOracle ? "bayes_oracle" : "embedding_zero_shot";
}

void AttributeClassifier::validate() const {
  if (classes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "classifier needs >= 2 classes");
  std::set<std::string> labels;
  for (const auto& c : classes) {
    if (c.label.empty()) throw Error(ErrorCode::kInvalidArgument, "class label is empty");
    if (!labels.insert(c.label).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate class label '" + c.label + "'");
    }
    if (kind == ClassifierKind::kBayesOracle) {
      if (!c.mixture) {
        throw Error(ErrorCode::kInvalidArgument, "bayes class '" + c.label + "' has no mixture");
      }
      c.mixture->validate();
      if (c.mixture->dim != classes.front().mixture->dim) {
        throw Error(ErrorCode::kShapeMismatch, "bayes classes differ in dim");
      }
    } else if (c.prompt.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "zero-shot class '" + c.label + "' has no prompt");
    }
  }
  if (kind == ClassifierKind::kEmbeddingZeroShot && (!text || !vision)) {
    throw Error(ErrorCode::kInvalidArgument, "zero-shot classifier needs text and vision providers");
  }
}

std::size_t AttributeClassifier::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].label == label) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown class label '" + label + "'");
}

std::vector<std::size_t> classify_indices(const AttributeClassifier& classifier,
                                          std::span<const ImageInput> samples) {
  classifier.validate();
  if (classifier.kind == ClassifierKind::kBayesOracle) {
    return parallel::classify_batch(classifier, samples);
  }
  std::vector<std::vector<double>> class_embeddings;
  for (const auto& c : classifier.classes) class_embeddings.push_back(classifier.text->embed(c.prompt));
  std::vector<std::size_t> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> e;
    try {
      e = classifier.vision->embed(samples[i]);
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::kBackend, "sample " + std::to_string(i) + ": " + ex.what());
    }
    std::size_t best = 0;
    double best_sim = cosine_similarity(e, class_embeddings[0]);
    for (std::size_t c = 1; c < class_embeddings.size(); ++c) {
      const double sim = cosine_similarity(e, class_embeddings[c]);
      if (sim > best_sim) {
        best = c;
        best_sim = sim;
      }
    }
    out[i] = best;
  }
  return out;
}

LabelRates rates_from_indices(const AttributeClassifier& classifier,
                              std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples to classify");
  std::vector<std::size_t> counts(classifier.classes.size(), 0);
  for (auto i : indices) ++counts.at(i);
  LabelRates rates;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    rates[classifier.classes[c].label] =
        static_cast<double>(counts[c]) / static_cast<double>(indices.size());
  }
  return rates;
}

LabelRates classify_all(std::span<const ImageInput> samples, const AttributeClassifier& classifier) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples to classify");
  const auto idx = classify_indices(classifier, samples);
  return rates_from_indices(classifier, idx);
}

double spd(double baseline_rate, double debiased_rate) {
  auto check = [](double r, const char* what) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, std::string(what) + " rate outside [0, 1]");
    }
  };
  check(baseline_rate, "baseline");
  check(debiased_rate, "debiased");
  return std::abs(debiased_rate - baseline_rate);
}

std::vector<PlanTermSummary> summarize_plan(const SteeringPlan& plan) {
  std::vector<PlanTermSummary> out;
  for (const auto& t : plan.terms()) out.push_back({t.ref, t.direction->train_step, t.weight});
  return out;
}

EvaluationReport evaluate(Backend& backend, const PromptSpec& prompt, const SteeringPlan& plan,
                          std::size_t n, const AttributeClassifier& classifier,
                          const std::string& target_label, const EvaluateOptions& options) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "evaluate needs n >= 1");
  classifier.validate();
  classifier.index_of(target_label);

  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = options.seed_base + i;

  EvaluationReport report;
  report.prompt_id = prompt.id;
  report.n = n;
  report.target_label = target_label;
  report.config = summarize_plan(plan);
  report.requires_human_evaluation = options.requires_human_evaluation;

  try {
    if (options.baseline_cache) {
      report.baseline_rates = *options.baseline_cache;
    } else {
      const auto base = batch_generate_all(backend, prompt, seeds, {});
      report.baseline_rates = classify_all(image_inputs(base), classifier);
    }
    const auto steered = batch_generate_all(backend, prompt, seeds, {}, &plan);
    report.per_label_rate = classify_all(image_inputs(steered), classifier);
  } catch (const Error& e) {
    throw Error(e.code(), "evaluate(prompt '" + prompt.id + "'): " + e.what());
  }
  report.spd = spd(report.baseline_rates.at(target_label), report.per_label_rate.at(target_label));
  return report;
}

std::string format_spd_table(const std::vector<EvaluationReport>& reports) {
  std::ostringstream out;
  auto row = [&](const std::string& name, auto cell) {
    out << std::left << std::setw(12) << name;
    for (const auto& r : reports) out << " | " << std::setw(12) << cell(r);
    out << '\n';
  };
  auto fixed2 = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
  };
  row("prompt", [](const EvaluationReport& r) { return r.prompt_id; });
  row("target", [](const EvaluationReport& r) { return r.target_label; });
  row("baseline", [&](const EvaluationReport& r) { return fixed2(r.baseline_rates.at(r.target_label)); });
  row("steered", [&](const EvaluationReport& r) { return fixed2(r.per_label_rate.at(r.target_label)); });
  row("SPD", [&](const EvaluationReport& r) {
    return r.requires_human_evaluation ? std::string("human eval") : fixed2(r.spd);
  });
  return out.str();
}

}  // namespace latsteer
