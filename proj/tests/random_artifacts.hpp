// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>

#include "latsteer/bias_report.hpp"
#include "latsteer/learner.hpp"
#include "latsteer/metrics.hpp"
#include "latsteer/tuner.hpp"

namespace latsteer::testing {

// Random artifacts covering every stored kind, for persistence round trips.
class ArtifactFactory {
 public:
  explicit ArtifactFactory(std::uint64_t seed) : gen_(seed) {}

  Shape shape() {
    Shape s(1 + gen_() % 3);
    for (auto& d : s) d = 1 + static_cast<std::uint32_t>(gen_() % 5);
    return s;
  }

  LatentTensor tensor(const Shape& s) {
    std::vector<float> v(shape_size(s));
    for (auto& x : v) x = static_cast<float>(normal_(gen_) * std::pow(10.0, static_cast<int>(gen_() % 7) - 3));
    return LatentTensor(std::move(v), s);
  }

  std::string word() {
    static const char* kWords[] = {"doctor", "man", "woman", "suit", "tie", "é-accent", "quote\"d", "tab\tbed"};
    return kWords[gen_() % 8] + std::to_string(gen_() % 1000);
  }

  double unit() { return std::uniform_real_distribution<double>(0, 1)(gen_); }

  Direction direction() {
    Direction d;
    LatentTensor raw;
    do {
      raw = tensor(shape());
    } while (raw.l2_norm() == 0.0);
    const auto n = normalize_direction(raw);
    d.vector = n.unit;
    d.raw_norm = n.norm;
    d.bias = normal_(gen_);
    d.train_step = static_cast<std::uint32_t>(gen_() % 50);
    d.neutral_id = word();
    d.target_id = word();
    d.n_per_class = 2 + static_cast<std::uint32_t>(gen_() % 100);
    d.cv_accuracy = unit();
    d.backend_id = word();
    d.created_at = static_cast<std::int64_t>(gen_() % 2000000000);
    return d;
  }

  LatentDataset dataset() {
    LatentDataset ds;
    ds.step = static_cast<std::uint32_t>(gen_() % 50);
    ds.neutral_id = word();
    ds.target_id = word();
    ds.backend_id = word();
    const auto s = shape();
    const std::size_t n = 2 + gen_() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      ds.items.push_back({tensor(s), ClassLabel::kNeutral, 100 + i});
      ds.items.push_back({tensor(s), ClassLabel::kTarget, 100 + n + i});
    }
    return ds;
  }

  TrajectoryRecord trajectory() {
    TrajectoryRecord r;
    r.prompt_id = word();
    r.seed = gen_();
    const auto s = shape();
    const std::size_t n = gen_() % 4;
    for (std::size_t i = 0; i < n; ++i) r.snapshots[static_cast<std::uint32_t>(gen_() % 50)] = tensor(s);
    r.final_sample = tensor(s);
    if (gen_() % 2) r.image_ref = "images/" + word() + ".png";
    return r;
  }

  SweepTable sweep() {
    SweepTable t;
    t.prompt_id = word();
    t.target_label = word();
    const std::size_t steps = 1 + gen_() % 3;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto step = static_cast<std::uint32_t>(5 * s);
      t.direction_refs[step] = std::to_string(gen_());
      for (double w : {0.0, 2.0, 4.5}) {
        SweepResult r{step, w, std::nullopt, unit(), 50, gen_() % 3 != 0};
        if (gen_() % 2) r.frechet = std::abs(normal_(gen_)) * 100;
        t.outcome.results.push_back(r);
      }
    }
    t.outcome.baseline_rate = unit();
    if (gen_() % 2) {
      t.outcome.baseline_frechet = unit() * 50;
      t.outcome.gate = *t.outcome.baseline_frechet * 3;
    }
    t.policy = gen_() % 2 ? SelectionPolicy::kMaxRateGated : SelectionPolicy::kMinFrechet;
    if (gen_() % 2) t.selected = t.outcome.results.front();
    return t;
  }

  EvaluationReport evaluation() {
    EvaluationReport r;
    r.prompt_id = word();
    r.n = 1 + gen_() % 200;
    r.target_label = "b";
    const double p = unit(), q = unit();
    r.baseline_rates = {{"a", 1 - p}, {"b", p}};
    r.per_label_rate = {{"a", 1 - q}, {"b", q}};
    r.spd = std::abs(q - p);
    const std::size_t terms = 1 + gen_() % 2;
    for (std::size_t i = 0; i < terms; ++i) {
      r.config.push_back({std::to_string(gen_()), static_cast<std::uint32_t>(gen_() % 50), normal_(gen_) * 10});
    }
    r.requires_human_evaluation = gen_() % 2;
    return r;
  }

  BiasReportDoc bias_report() {
    BiasReportDoc d;
    d.concept_name = word();
    d.n_images = gen_() % 100;
    d.k = 1 + gen_() % 15;
    for (std::size_t i = 0; i < d.k; ++i) d.top_attributes_text.push_back({word(), 2 * unit() - 1});
    if (gen_() % 2) {
      d.vision_panel = {false, "vision " + word()};
    } else {
      for (std::size_t i = 0; i < d.k; ++i) d.top_attributes_vision.push_back({word(), 2 * unit() - 1});
      if (gen_() % 2) d.per_image_vision["img/" + word()] = {{word(), unit()}};
    }
    for (int i = 0; i < 3; ++i) d.detection_frequencies[word()] = gen_() % 100;
    d.social_tallies["gender"] = {{"man", gen_() % 50}, {"woman", gen_() % 50}};
    d.provider_ids = {{"text", word()}, {"vision", word()}};
    return d;
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_;
};

inline bool same_direction(const Direction& a, const Direction& b) {
  return a.vector == b.vector && a.bias == b.bias && a.raw_norm == b.raw_norm &&
         a.train_step == b.train_step && a.neutral_id == b.neutral_id && a.target_id == b.target_id &&
         a.n_per_class == b.n_per_class && a.cv_accuracy == b.cv_accuracy &&
         a.backend_id == b.backend_id && a.created_at == b.created_at;
}

}  // namespace latsteer::testing
