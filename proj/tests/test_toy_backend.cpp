// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "latsteer/learner.hpp"
#include "latsteer/rng.hpp"
#include "latsteer/toy_backend.hpp"

using namespace latsteer;

namespace {

// Written independently of the library: log N-mixture density of the VP
// marginal at alpha_bar.
double oracle_log_density(const MixtureSpec& m, const std::vector<double>& x, double ab) {
  double best = -INFINITY;
  std::vector<double> terms;
  for (const auto& c : m.components) {
    double t = std::log(c.weight);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double mu = std::sqrt(ab) * c.mean[j];
      const double v = ab * c.variance[j] + (1 - ab);
      t += -0.5 * std::log(2 * std::numbers::pi * v) - 0.5 * (x[j] - mu) * (x[j] - mu) / v;
    }
    terms.push_back(t);
    best = std::max(best, t);
  }
  double s = 0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

MixtureSpec random_mixture(std::mt19937_64& gen, std::size_t dim, std::size_t comps) {
  std::uniform_real_distribution<double> w(0.2, 1.0), mu(-4, 4), var(0.05, 3.0);
  MixtureSpec m;
  m.dim = dim;
  double total = 0;
  for (std::size_t c = 0; c < comps; ++c) {
    MixtureComponent comp;
    comp.weight = w(gen);
    total += comp.weight;
    for (std::size_t j = 0; j < dim; ++j) {
      comp.mean.push_back(mu(gen));
      comp.variance.push_back(var(gen));
    }
    m.components.push_back(comp);
  }
  for (auto& c : m.components) c.weight /= total;
  return m;
}

const toy::Schedule& schedule() {
  static const auto s = toy::Schedule::log_snr_linear(30);
  return s;
}

}  // namespace

TEST(Rng, MatchesIndependentReference) {
  EXPECT_EQ(rng::mix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng::counter_bits(42, 0, 3, 1), 0xf71c060738655b04ULL);
  EXPECT_EQ(rng::counter_bits(~0ULL, 7, 9, 2), 0x1cf56dc86956e79dULL);
  const double expect[] = {-0.5691025777526046, -1.2330629695423012, 0.25177925573202614, -1.3834184920659853};
  for (std::uint32_t c = 0; c < 4; ++c) EXPECT_NEAR(rng::standard_normal(1234, 0, c), expect[c], 1e-14);
}

TEST(Rng, InitialLatentUsesStepZero) {
  const auto z = toy::draw_initial_latent({2, 3}, 99);
  for (std::uint32_t j = 0; j < 6; ++j) EXPECT_EQ(z[j], static_cast<float>(rng::standard_normal(99, 0, j)));
}

TEST(Schedule, DefaultIsValidAndMonotone) {
  const auto& s = schedule();
  ASSERT_EQ(s.alpha_bar.size(), 31u);
  EXPECT_NEAR(s.alpha_bar.front(), 1e-4, 1e-12);
  EXPECT_NEAR(s.alpha_bar.back(), 1 - 1e-4, 1e-12);
  for (std::size_t i = 1; i < s.alpha_bar.size(); ++i) EXPECT_LT(s.alpha_bar[i - 1], s.alpha_bar[i]);
}

TEST(Schedule, RejectsBadSequences) {
  toy::Schedule s;
  s.k = 2;
  s.alpha_bar = {1e-4, 0.5, 0.4};
  EXPECT_THROW(s.validate(), Error);
  s.alpha_bar = {0.5, 0.7, 0.9999};
  EXPECT_THROW(s.validate(), Error);
  s.alpha_bar = {1e-4, 0.5};
  EXPECT_THROW(s.validate(), Error);
}

TEST(MarginalParams, StationaryStandardNormal) {
  const auto m = isotropic_mixture({1.0}, {{0.0, 0.0, 0.0}});
  for (double ab : {0.01, 0.3, 0.9}) EXPECT_EQ(toy::marginal_params(m, ab), m);
}

TEST(MarginalParams, QuarterAlphaHalvesMean) {
  const auto m = isotropic_mixture({1.0}, {{2.0, -4.0}});
  const auto t = toy::marginal_params(m, 0.25);
  EXPECT_DOUBLE_EQ(t.components[0].mean[0], 1.0);
  EXPECT_DOUBLE_EQ(t.components[0].mean[1], -2.0);
  EXPECT_DOUBLE_EQ(t.components[0].variance[0], 1.0);
  EXPECT_EQ(t.components[0].weight, 1.0);
}

TEST(MarginalParams, OneIsIdentity) {
  std::mt19937_64 gen(1);
  const auto m = random_mixture(gen, 4, 3);
  EXPECT_EQ(toy::marginal_params(m, 1.0), m);
  EXPECT_THROW(toy::marginal_params(m, 0.0), Error);
}

TEST(MixtureScore, StandardNormal) {
  const auto m = isotropic_mixture({1.0}, {{0.0, 0.0}});
  const auto s = toy::mixture_score(m, std::vector<double>{1.0, -2.0}, 1.0);
  EXPECT_DOUBLE_EQ(s[0], -1.0);
  EXPECT_DOUBLE_EQ(s[1], 2.0);
}

TEST(MixtureScore, SingleGaussianClosedForm) {
  const std::vector<double> mu = {3.0, -1.0, 0.5};
  const auto m = isotropic_mixture({1.0}, {mu});
  const std::vector<double> x = {0.2, 0.7, -1.1};
  for (double ab : {0.1, 0.5, 0.9}) {
    const auto s = toy::mixture_score(m, x, ab);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(s[j], -(x[j] - std::sqrt(ab) * mu[j]), 1e-12);
  }
}

TEST(MixtureScore, MatchesFiniteDifferenceOracle) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> ud(0.05, 1.0), xd(-5, 5);
  double worst = 0;
  for (int mix = 0; mix < 10; ++mix) {
    const auto m = random_mixture(gen, 3, 2 + mix % 3);
    for (int probe = 0; probe < 100; ++probe) {
      const double ab = ud(gen);
      std::vector<double> x(3);
      for (auto& v : x) v = xd(gen);
      const auto s = toy::mixture_score(m, x, ab);
      for (std::size_t j = 0; j < 3; ++j) {
        const double h = 1e-5;
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const double fd = (oracle_log_density(m, xp, ab) - oracle_log_density(m, xm, ab)) / (2 * h);
        worst = std::max(worst, std::abs(fd - s[j]));
      }
      EXPECT_NEAR(toy::log_density(m, x, ab), oracle_log_density(m, x, ab), 1e-10);
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(SampleTrajectory, ZeroOffsetEqualsNoOffset) {
  const auto m = isotropic_mixture({0.5, 0.5}, {{3, 0}, {-3, 0}});
  const CaptureSet cap = {0, 10, 30};
  const auto zero = LatentTensor::zeros({2});
  for (std::uint64_t seed : {1ull, 77ull, 123456789ull}) {
    EXPECT_EQ(toy::sample_trajectory(m, schedule(), seed, cap, &zero, "p"),
              toy::sample_trajectory(m, schedule(), seed, cap, nullptr, "p"));
  }
}

TEST(SampleTrajectory, NarrowGaussianLandsNearMean) {
  MixtureSpec m;
  m.dim = 3;
  m.components = {{1.0, {2.0, -1.0, 0.5}, {0.01, 0.01, 0.01}}};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = toy::sample_trajectory(m, schedule(), seed, {});
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r.final_sample[j], m.components[0].mean[j], 0.5);
  }
}

TEST(SampleTrajectory, Deterministic) {
  std::mt19937_64 gen(5);
  const auto m = random_mixture(gen, 4, 3);
  const CaptureSet cap = {0, 1, 15, 30};
  const auto a = toy::sample_trajectory(m, schedule(), 42, cap);
  const auto b = toy::sample_trajectory(m, schedule(), 42, cap);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.snapshots.size(), 4u);
  EXPECT_EQ(a.snapshots.at(30), a.final_sample);
  EXPECT_EQ(a.snapshots.at(0), toy::draw_initial_latent({4}, 42));
}

TEST(SampleTrajectory, OffsetEntersBeforeFirstStep) {
  const auto m = isotropic_mixture({1.0}, {{1.0, 2.0}});
  const LatentTensor off({0.5f, -0.25f}, {2});
  const auto r = toy::sample_trajectory(m, schedule(), 9, {0}, &off);
  const auto z = toy::draw_initial_latent({2}, 9);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_EQ(r.snapshots.at(0)[j], static_cast<float>(static_cast<double>(z[j]) + off[j]));
  }
}

TEST(SampleTrajectory, CaptureOutOfRange) {
  const auto m = isotropic_mixture({1.0}, {{0.0}});
  EXPECT_THROW(toy::sample_trajectory(m, schedule(), 1, {31}), Error);
}

TEST(SampleTrajectory, TerminalMomentsWithinThreeStandardErrors) {
  const double a = 3.0 / std::sqrt(2.0);
  const auto m = isotropic_mixture({0.5, 0.5}, {{a, a}, {-a, -a}});
  const std::size_t n = 2000;
  std::vector<std::vector<double>> xs;
  for (std::uint64_t seed = 0; seed < n; ++seed) xs.push_back(toy::sample_trajectory(m, schedule(), seed, {}).final_sample.to_doubles());
  const auto mean = m.mean();
  const auto cov = m.covariance();
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0;
    for (const auto& x : xs) s += x[i];
    const double emp = s / n;
    EXPECT_NEAR(emp, mean[i], 3 * std::sqrt(cov[i * 2 + i] / n));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      // Products around the true mean; their spread gives the standard error.
      double s = 0, s2 = 0;
      for (const auto& x : xs) {
        const double p = (x[i] - mean[i]) * (x[j] - mean[j]);
        s += p;
        s2 += p * p;
      }
      const double emp = s / n;
      const double se = std::sqrt((s2 / n - emp * emp) / n);
      EXPECT_NEAR(emp, cov[i * 2 + j], 3 * se) << i << "," << j;
    }
  }
}

TEST(SampleTrajectory, SnapshotZeroIsPromptIndependent) {
  const auto p1 = isotropic_mixture({1.0}, {std::vector<double>(8, 3.0)});
  const auto p2 = isotropic_mixture({1.0}, {std::vector<double>(8, -3.0)});
  LatentDataset ds;
  ds.step = 0;
  ds.neutral_id = "a";
  ds.target_id = "b";
  for (std::uint64_t s = 0; s < 200; ++s) {
    ds.items.push_back({toy::sample_trajectory(p1, schedule(), 1000 + s, {0}).snapshots.at(0), ClassLabel::kNeutral, 1000 + s});
    ds.items.push_back({toy::sample_trajectory(p2, schedule(), 5000 + s, {0}).snapshots.at(0), ClassLabel::kTarget, 5000 + s});
  }
  const double acc = cross_validate(ds, SvmOptions{});
  EXPECT_GE(acc, 0.4);
  EXPECT_LE(acc, 0.6);
}

TEST(BayesClassify, MeanOfSoleComponent) {
  const auto a = isotropic_mixture({1.0}, {{3.0, 3.0}});
  const auto b = isotropic_mixture({1.0}, {{-3.0, -3.0}});
  EXPECT_EQ(toy::bayes_classify(a, b, std::vector<double>{3.0, 3.0}), toy::BayesLabel::kA);
  EXPECT_EQ(toy::bayes_classify(a, b, std::vector<double>{-3.0, -3.0}), toy::BayesLabel::kB);
}

TEST(BayesClassify, TieGoesToA) {
  const auto a = isotropic_mixture({1.0}, {{2.0}});
  const auto b = isotropic_mixture({1.0}, {{-2.0}});
  EXPECT_EQ(toy::bayes_classify(a, b, std::vector<double>{0.0}), toy::BayesLabel::kA);
  EXPECT_EQ(toy::bayes_classify(b, a, std::vector<double>{0.0}), toy::BayesLabel::kA);
}

TEST(BayesClassify, AgreesWithDirectDensityComparison) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> xd(-6, 6);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_mixture(gen, 3, 2);
    const auto b = random_mixture(gen, 3, 3);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> x(3);
      for (auto& v : x) v = xd(gen);
      const bool a_wins = oracle_log_density(a, x, 1.0) >= oracle_log_density(b, x, 1.0);
      EXPECT_EQ(toy::bayes_classify(a, b, x), a_wins ? toy::BayesLabel::kA : toy::BayesLabel::kB);
    }
  }
}

TEST(BayesArgmax, FirstIndexWinsTies) {
  const auto a = isotropic_mixture({1.0}, {{1.0}});
  const auto b = isotropic_mixture({1.0}, {{-1.0}});
  const MixtureSpec* specs[] = {&a, &b, &a};
  EXPECT_EQ(toy::bayes_argmax(specs, std::vector<double>{0.0}), 0u);
  EXPECT_EQ(toy::bayes_argmax(specs, std::vector<double>{-0.5}), 1u);
}
