// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "latsteer/metrics.hpp"

using namespace latsteer;

namespace {

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

AttributeClassifier bayes_pm(double a, std::size_t dim = 2) {
  AttributeClassifier c;
  c.classes.push_back({"plus", isotropic_mixture({1.0}, {std::vector<double>(dim, a)}), ""});
  c.classes.push_back({"minus", isotropic_mixture({1.0}, {std::vector<double>(dim, -a)}), ""});
  return c;
}

ImageInput latent(std::vector<float> v) {
  const Shape shape{static_cast<std::uint32_t>(v.size())};
  return ImageInput{"", LatentTensor(std::move(v), shape)};
}

// Text "x" embeds to e_x; images embed to their tensor values times a scale.
class AxisText final : public TextEmbedder {
 public:
  std::string id() const override { return "axis-text"; }
  std::size_t dim() const override { return 2; }
  std::vector<double> embed(const std::string& text) override {
    return text == "x" ? std::vector<double>{1, 0} : std::vector<double>{0, 1};
  }
};

class ScaledVision final : public ImageEmbedder {
 public:
  explicit ScaledVision(double scale, int fail_at = -1) : scale_(scale), fail_at_(fail_at) {}
  std::string id() const override { return "scaled"; }
  std::size_t dim() const override { return 2; }
  std::vector<double> embed(const ImageInput& image) override {
    if (calls_++ == fail_at_) throw std::runtime_error("encoder crashed");
    return {scale_ * image.tensor[0], scale_ * image.tensor[1]};
  }

 private:
  double scale_;
  int fail_at_;
  int calls_ = 0;
};

AttributeClassifier zero_shot(double scale, int fail_at = -1) {
  AttributeClassifier c;
  c.kind = ClassifierKind::kEmbeddingZeroShot;
  c.classes = {{"x", std::nullopt, "x"}, {"y", std::nullopt, "y"}};
  c.text = std::make_shared<AxisText>();
  c.vision = std::make_shared<ScaledVision>(scale, fail_at);
  return c;
}

}  // namespace

TEST(Spd, TableValues) {
  const double a = spd(8 / 100.0, 95 / 100.0);
  EXPECT_EQ(two_decimals(a), "0.87");
  EXPECT_NEAR(a, 0.87, 1e-12);
  const double b = spd(0.0, 52 / 100.0);
  EXPECT_EQ(two_decimals(b), "0.52");
  EXPECT_EQ(b, 0.52);
}

TEST(Spd, SymmetricAndBounded) {
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double p = i / 20.0, q = j / 20.0;
      EXPECT_EQ(spd(p, q), spd(q, p));
      EXPECT_GE(spd(p, q), 0.0);
      EXPECT_LE(spd(p, q), 1.0);
    }
  }
  EXPECT_EQ(spd(0.3, 0.3), 0.0);
  EXPECT_THROW(spd(-0.1, 0.5), Error);
  EXPECT_THROW(spd(0.5, 1.5), Error);
  EXPECT_THROW(spd(std::nan(""), 0.5), Error);
}

TEST(ClassifyAll, BayesRates) {
  const std::vector<ImageInput> samples = {latent({3, 3}), latent({2, 1}), latent({-3, -1}), latent({-2, -2})};
  const auto rates = classify_all(samples, bayes_pm(2.0));
  EXPECT_DOUBLE_EQ(rates.at("plus"), 0.5);
  EXPECT_DOUBLE_EQ(rates.at("minus"), 0.5);
  const std::vector<ImageInput> none_minus = {latent({3, 3})};
  const auto r2 = classify_all(none_minus, bayes_pm(2.0));
  EXPECT_EQ(r2.at("minus"), 0.0);
  EXPECT_EQ(r2.size(), 2u);
}

TEST(ClassifyAll, EmptyInputRejected) {
  EXPECT_THROW(classify_all({}, bayes_pm(1.0)), Error);
}

TEST(ClassifyAll, ZeroShotScaleInvariant) {
  const std::vector<ImageInput> samples = {latent({1, 0.2f}), latent({0.1f, 2}), latent({-1, 3}), latent({5, 4})};
  const auto a = classify_indices(zero_shot(1.0), samples);
  EXPECT_EQ(a, (std::vector<std::size_t>{0, 1, 1, 0}));
  EXPECT_EQ(classify_indices(zero_shot(37.5), samples), a);
  EXPECT_EQ(classify_indices(zero_shot(1e-3), samples), a);
}

TEST(ClassifyAll, ZeroShotTieGoesToFirstClass) {
  const std::vector<ImageInput> samples = {latent({1, 1})};
  EXPECT_EQ(classify_indices(zero_shot(1.0), samples), (std::vector<std::size_t>{0}));
}

TEST(ClassifyAll, ProviderErrorNamesSample) {
  const std::vector<ImageInput> samples = {latent({1, 0}), latent({0, 1}), latent({1, 1})};
  try {
    classify_indices(zero_shot(1.0, 2), samples);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackend);
    EXPECT_NE(std::string(e.what()).find("sample 2"), std::string::npos);
  }
}

TEST(Classifier, Validation) {
  auto c = bayes_pm(1.0);
  c.classes[1].label = "plus";
  EXPECT_THROW(c.validate(), Error);
  c = bayes_pm(1.0);
  c.classes.pop_back();
  EXPECT_THROW(c.validate(), Error);
  auto z = zero_shot(1.0);
  z.text.reset();
  EXPECT_THROW(z.validate(), Error);
}

TEST(Evaluate, ZeroWeightGivesZeroSpd) {
  ToyBackend backend(toy::Schedule::log_snr_linear(30), 2);
  PromptSpec p{"mix", "", isotropic_mixture({0.8, 0.2}, {{2, 2}, {-2, -2}}), PromptRole::kNeutral, ""};
  Direction d;
  d.vector = LatentTensor({0.6f, 0.8f}, {2});
  d.n_per_class = 2;
  const auto plan = SteeringPlan::single(d, 0.0, "dir");
  const auto report = evaluate(backend, p, plan, 40, bayes_pm(2.0), "minus");
  EXPECT_EQ(report.spd, 0.0);
  EXPECT_EQ(report.per_label_rate, report.baseline_rates);
  double sum = 0;
  for (const auto& [label, r] : report.per_label_rate) sum += r;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  ASSERT_EQ(report.config.size(), 1u);
  EXPECT_EQ(report.config[0].direction_ref, "dir");
}

TEST(Evaluate, SteeringShiftsRateAndUsesCache) {
  ToyBackend backend(toy::Schedule::log_snr_linear(30), 2);
  PromptSpec p{"mix", "", isotropic_mixture({0.9, 0.1}, {{2, 2}, {-2, -2}}), PromptRole::kNeutral, ""};
  Direction d;
  const float s = static_cast<float>(-1.0 / std::sqrt(2.0));
  d.vector = LatentTensor({s, s}, {2});
  d.n_per_class = 2;
  const auto plan = SteeringPlan::single(d, 3.0);
  const auto report = evaluate(backend, p, plan, 50, bayes_pm(2.0), "minus");
  EXPECT_GT(report.per_label_rate.at("minus"), report.baseline_rates.at("minus"));
  EXPECT_EQ(report.spd, std::abs(report.per_label_rate.at("minus") - report.baseline_rates.at("minus")));
  EvaluateOptions opts;
  opts.baseline_cache = &report.baseline_rates;
  EXPECT_EQ(evaluate(backend, p, plan, 50, bayes_pm(2.0), "minus", opts), report);
  EXPECT_THROW(evaluate(backend, p, plan, 50, bayes_pm(2.0), "nope"), Error);
}

TEST(SpdTable, Format) {
  EvaluationReport r;
  r.prompt_id = "doctor";
  r.target_label = "woman";
  r.baseline_rates = {{"man", 1.0}, {"woman", 0.0}};
  r.per_label_rate = {{"man", 0.48}, {"woman", 0.52}};
  r.spd = 0.52;
  const auto t = format_spd_table({r});
  EXPECT_NE(t.find("doctor"), std::string::npos);
  EXPECT_NE(t.find("0.52"), std::string::npos);
  r.requires_human_evaluation = true;
  EXPECT_NE(format_spd_table({r}).find("human eval"), std::string::npos);
}
