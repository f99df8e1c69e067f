// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <omp.h>

#include "latsteer/experiment.hpp"
#include "latsteer/parallel.hpp"

using namespace latsteer;

namespace {

class ThreadCount {
 public:
  explicit ThreadCount(int n) : saved_(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved_); }

 private:
  int saved_;
};

}  // namespace

TEST(Parallel, GenerateBatchBitIdentical) {
  const auto cfg = default_toy_experiment();
  ToyBackend backend(cfg.schedule, cfg.dim);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 64; ++s) seeds.push_back(s * 7919);
  Direction d;
  d.vector = LatentTensor::from_doubles(std::vector<double>(8, 1.0 / std::sqrt(8.0)), {8});
  d.n_per_class = 2;
  const auto plan = SteeringPlan::single(d, 3.0);
  const auto serial = parallel::reference::generate_batch(backend, cfg.neutral, seeds, {0, 15, 30}, &plan, {});
  for (int threads : {1, 2, 3, 8}) {
    ThreadCount tc(threads);
    const auto par = parallel::generate_batch(backend, cfg.neutral, seeds, {0, 15, 30}, &plan, {});
    ASSERT_EQ(par.size(), serial.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      EXPECT_EQ(par[i].seed, serial[i].seed);
      ASSERT_TRUE(par[i].ok());
      EXPECT_EQ(*par[i].record, *serial[i].record) << threads << " threads, item " << i;
    }
  }
}

TEST(Parallel, ClassifyBatchIdentical) {
  const auto cfg = default_toy_experiment();
  ToyBackend backend(cfg.schedule, cfg.dim);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 200; ++s) seeds.push_back(s);
  const auto inputs = image_inputs(batch_generate_all(backend, cfg.neutral, seeds, {}));
  const auto serial = parallel::reference::classify_batch(cfg.classifier, inputs);
  for (int threads : {1, 2, 5}) {
    ThreadCount tc(threads);
    EXPECT_EQ(parallel::classify_batch(cfg.classifier, inputs), serial);
  }
}
