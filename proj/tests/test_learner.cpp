// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "latsteer/learner.hpp"
#include "latsteer/similarity.hpp"

using namespace latsteer;

namespace {

LatentDataset clusters(std::size_t n, std::size_t dim, const std::vector<double>& shift, double spread,
                       std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, spread);
  LatentDataset ds;
  ds.step = 3;
  ds.neutral_id = "n";
  ds.target_id = "t";
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const bool target = i % 2 == 1;
    std::vector<double> v(dim);
    for (std::size_t j = 0; j < dim; ++j) v[j] = scale * (nd(gen) + (target ? shift[j] : -shift[j]));
    ds.items.push_back({LatentTensor::from_doubles(v, {static_cast<std::uint32_t>(dim)}),
                        target ? ClassLabel::kTarget : ClassLabel::kNeutral, i});
  }
  return ds;
}

// Objective with the bias regularized through the constant feature `s`.
double primal(const LatentDataset& ds, const std::vector<double>& w, double b, double c, double s) {
  double obj = 0.5 * (b / s) * (b / s);
  for (double v : w) obj += 0.5 * v * v;
  for (const auto& item : ds.items) {
    const auto x = item.latent.to_doubles();
    double s = b;
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
    const double y = item.label == ClassLabel::kTarget ? 1.0 : -1.0;
    obj += c * std::max(0.0, 1.0 - y * s);
  }
  return obj;
}

}  // namespace

TEST(FitDirection, OneDimensionalClusters) {
  LatentDataset ds;
  ds.step = 0;
  const float neutral[] = {-2.0f, -1.5f, -1.0f};
  const float target[] = {1.0f, 1.5f, 2.0f};
  for (std::uint64_t i = 0; i < 3; ++i) {
    ds.items.push_back({LatentTensor({neutral[i]}, {1}), ClassLabel::kNeutral, i});
    ds.items.push_back({LatentTensor({target[i]}, {1}), ClassLabel::kTarget, 10 + i});
  }
  const auto fit = fit_direction(ds, 1.0);
  EXPECT_EQ(fit.direction.vector, LatentTensor({1.0f}, {1}));
  EXPECT_DOUBLE_EQ(fit.direction.cv_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(fit.fit.cv_accuracy, 1.0);
}

TEST(FitDirection, LabelSwapNegatesExactly) {
  auto ds = clusters(30, 6, {0.8, 0.1, 0, 0, -0.3, 0}, 1.0, 4);
  const auto a = fit_direction(ds, 1.0);
  for (auto& item : ds.items) {
    item.label = item.label == ClassLabel::kTarget ? ClassLabel::kNeutral : ClassLabel::kTarget;
  }
  const auto b = fit_direction(ds, 1.0);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(a.direction.vector[j], -b.direction.vector[j]);
}

TEST(FitDirection, AlignsWithSeparatingAxis) {
  std::vector<double> shift(8, 0.0);
  shift[5] = 1.5;
  const auto fit = fit_direction(clusters(50, 8, shift, 1.0, 11), 1.0);
  EXPECT_GE(fit.direction.vector[5], 0.9);
  EXPECT_NEAR(fit.direction.vector.l2_norm(), 1.0, 1e-6);
}

TEST(FitDirection, ScaleRobustWithRescaledC) {
  const std::vector<double> shift = {1.0, 0.5, -0.5, 0.0};
  const auto base = fit_direction(clusters(40, 4, shift, 1.0, 21), 1.0);
  for (double s : {0.1, 10.0}) {
    const auto scaled = fit_direction(clusters(40, 4, shift, 1.0, 21, s), 1.0 / (s * s));
    EXPECT_GE(cosine_similarity(base.direction.vector.to_doubles(), scaled.direction.vector.to_doubles()), 0.999) << s;
  }
}

TEST(FitDirection, Deterministic) {
  const auto ds = clusters(25, 5, {1, 0, 0, 0, 0}, 1.0, 3);
  const auto a = fit_direction(ds, 0.5);
  const auto b = fit_direction(ds, 0.5);
  EXPECT_EQ(a.direction.vector, b.direction.vector);
  EXPECT_EQ(a.fit, b.fit);
}

TEST(FitDirection, PointsFromNeutralToTarget) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = clusters(20, 3, {0.3, -0.2, 0.1}, 1.0, seed);
    const auto fit = fit_direction(ds, 1.0);
    double t = 0, n = 0;
    for (const auto& item : ds.items) {
      double s = 0;
      for (std::size_t j = 0; j < 3; ++j) s += item.latent[j] * fit.direction.vector[j];
      (item.label == ClassLabel::kTarget ? t : n) += s;
    }
    EXPECT_GT(t, n);
  }
}

TEST(FitDirection, DegenerateData) {
  LatentDataset ds;
  for (std::uint64_t i = 0; i < 4; ++i) {
    ds.items.push_back({LatentTensor({1.0f, 2.0f}, {2}), ClassLabel::kNeutral, i});
    ds.items.push_back({LatentTensor({1.0f, 2.0f}, {2}), ClassLabel::kTarget, i});
  }
  try {
    fit_direction(ds, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerate);
    EXPECT_NE(std::string(e.what()).find("cv_accuracy"), std::string::npos);
  }
}

TEST(FitDirection, TooFewItems) {
  LatentDataset ds;
  ds.items.push_back({LatentTensor({1.0f}, {1}), ClassLabel::kNeutral, 0});
  ds.items.push_back({LatentTensor({2.0f}, {1}), ClassLabel::kTarget, 1});
  EXPECT_THROW(fit_direction(ds, 1.0), Error);
}

TEST(Svm, SolutionIsPrimalOptimal) {
  const auto ds = clusters(30, 4, {0.4, 0.4, 0, 0}, 1.0, 99);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& item : ds.items) {
    x.push_back(item.latent.to_doubles());
    y.push_back(item.label == ClassLabel::kTarget ? 1 : -1);
  }
  const double c = 0.7;
  const auto model = train_linear_svm(x, y, SvmOptions{c});
  double sq = 0;
  for (const auto& row : x) {
    for (double v : row) sq += v * v;
  }
  const double s = std::sqrt(sq / static_cast<double>(x.size()));
  EXPECT_NEAR(model.bias_feature, s, 1e-12 * s);
  const double best = primal(ds, model.weights, model.bias, c, s);
  EXPECT_NEAR(best, model.primal, 1e-9 * std::max(1.0, best));
  // Convexity: no nearby point does better than the tolerance allows.
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0.0, 1e-3);
  for (int t = 0; t < 500; ++t) {
    auto w = model.weights;
    for (auto& v : w) v += nd(gen);
    EXPECT_GE(primal(ds, w, model.bias + nd(gen), c, s), best - 1e-5 * std::max(1.0, best));
  }
  EXPECT_LE(model.duality_gap, 1e-6 * std::max(1.0, model.primal));
}

TEST(CrossValidate, FoldAssignmentByIndex) {
  const auto ds = clusters(10, 2, {3, 0}, 0.3, 5);
  EXPECT_DOUBLE_EQ(cross_validate(ds, SvmOptions{}), 1.0);
  EXPECT_THROW(cross_validate(ds, SvmOptions{}, 1), Error);
}

TEST(BuildDataset, ToyBackendPairsSeeds) {
  ToyBackend backend(toy::Schedule::log_snr_linear(30), 4);
  PromptSpec neutral{"n", "", isotropic_mixture({1.0}, {{2, 0, 0, 0}}), PromptRole::kNeutral, ""};
  PromptSpec target{"t", "", isotropic_mixture({1.0}, {{-2, 0, 0, 0}}), PromptRole::kTarget, ""};
  const auto sets = build_dataset(backend, neutral, target, 50, {10, 25}, 100);
  ASSERT_EQ(sets.size(), 2u);
  for (const auto& [step, ds] : sets) {
    EXPECT_EQ(ds.step, step);
    EXPECT_EQ(ds.count(ClassLabel::kNeutral), 50u);
    EXPECT_EQ(ds.count(ClassLabel::kTarget), 50u);
    EXPECT_NO_THROW(ds.validate());
    EXPECT_EQ(ds.items.front().seed, 100u);
  }
  EXPECT_THROW(build_dataset(backend, neutral, target, 1, {10}, 0), Error);
  const auto profile = separability_profile(sets, 1.0);
  ASSERT_EQ(profile.size(), 2u);
  EXPECT_GE(profile[1].second, 0.85);
}
