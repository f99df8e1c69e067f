// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels: batch generation and Bayes
// classification on the default toy setup.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "latsteer/experiment.hpp"
#include "latsteer/parallel.hpp"

using namespace latsteer;

namespace {

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 512;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  const auto cfg = default_toy_experiment();
  ToyBackend backend(cfg.schedule, cfg.dim);
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t j = 0; j < n; ++j) seeds[j] = 10000 + j;

  std::vector<BatchItem> par, ser;
  const double t_ser = best_of(reps, [&] {
    ser = parallel::reference::generate_batch(backend, cfg.neutral, seeds, cfg.capture_steps, nullptr, {});
  });
  const double t_par = best_of(reps, [&] {
    par = parallel::generate_batch(backend, cfg.neutral, seeds, cfg.capture_steps, nullptr, {});
  });
  bool same = par.size() == ser.size();
  for (std::size_t i = 0; same && i < par.size(); ++i) same = par[i].record == ser[i].record;

  std::vector<ImageInput> samples;
  for (const auto& item : par) samples.push_back(image_input(*item.record));
  AttributeClassifier classifier = cfg.classifier;
  std::vector<std::size_t> cls_par, cls_ser;
  const double c_ser = best_of(reps, [&] { cls_ser = parallel::reference::classify_batch(classifier, samples); });
  const double c_par = best_of(reps, [&] { cls_par = parallel::classify_batch(classifier, samples); });

  std::printf("threads %d, %zu seeds, best of %d\n", parallel::max_threads(), n, reps);
  std::printf("%-16s %10s %10s %8s %s\n", "kernel", "serial ms", "omp ms", "speedup", "identical");
  std::printf("%-16s %10.2f %10.2f %8.2f %s\n", "generate_batch", t_ser, t_par, t_ser / t_par, same ? "yes" : "NO");
  std::printf("%-16s %10.2f %10.2f %8.2f %s\n", "classify_batch", c_ser, c_par, c_ser / c_par,
              cls_par == cls_ser ? "yes" : "NO");
  return same && cls_par == cls_ser ? 0 : 1;
}
