// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/tuner.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <tuple>

namespace latsteer {

void GaussianStats::validate() const {
  const std::size_t d = mean.size();
  if (d == 0 || covariance.size() != d * d) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian stats sizes are inconsistent");
  }
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "gaussian stats need n >= 2");
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (std::abs(covariance[i * d + j] - covariance[j * d + i]) > 1e-9) {
        throw Error(ErrorCode::kInvalidArgument, "covariance is not symmetric");
      }
    }
  }
}

GaussianStats GaussianStats::from_samples(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need >= 2 samples for stats");
  const std::size_t d = rows.front().size();
  GaussianStats s;
  s.n = rows.size();
  s.mean.assign(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw Error(ErrorCode::kShapeMismatch, "sample rows differ in length");
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= static_cast<double>(s.n);
  s.covariance.assign(d * d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = r[i] - s.mean[i];
      for (std::size_t j = i; j < d; ++j) s.covariance[i * d + j] += di * (r[j] - s.mean[j]);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double v = s.covariance[i * d + j] / static_cast<double>(s.n - 1);
      s.covariance[i * d + j] = v;
      s.covariance[j * d + i] = v;
    }
  }
  return s;
}

namespace {

using Matrix = Eigen::MatrixXd;

Matrix as_matrix(const GaussianStats& s) {
  const auto d = static_cast<Eigen::Index>(s.dim());
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = s.covariance[i * d + j];
  }
  return 0.5 * (m + m.transpose());
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_sqrt_product(const Matrix& a, const Matrix& b) {
  const Matrix ra = psd_sqrt(a);
  const Matrix inner = ra * b * ra;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "frechet_distance: dims " + std::to_string(a.dim()) +
                                               " vs " + std::to_string(b.dim()));
  }
  a.validate();
  b.validate();
  double mean_term = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const double d = a.mean[j] - b.mean[j];
    mean_term += d * d;
  }
  const Matrix sa = as_matrix(a);
  const Matrix sb = as_matrix(b);
  // Average both orderings so the result is symmetric to rounding.
  const double cross = 0.5 * (trace_sqrt_product(sa, sb) + trace_sqrt_product(sb, sa));
  const double fd = mean_term + sa.trace() + sb.trace() - 2.0 * cross;
  return std::max(fd, 0.0);
}

std::vector<std::vector<double>> sample_features(const std::vector<TrajectoryRecord>& records,
                                                 ImageEmbedder* embedder) {
  std::vector<std::vector<double>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    rows.push_back(embedder ? embedder->embed(image_input(r)) : r.final_sample.to_doubles());
  }
  return rows;
}

double zero_shot_rate(std::span<const ImageInput> samples, const AttributeClassifier& classifier,
                      const std::string& target_label) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "zero_shot_rate needs samples");
  const auto target = classifier.index_of(target_label);
  const auto idx = classify_indices(classifier, samples);
  const auto hits = std::count(idx.begin(), idx.end(), target);
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<double> default_omega_grid() {
  std::vector<double> g;
  for (int w = 0; w <= 40; w += 2) g.push_back(w);
  return g;
}

SweepOutcome sweep(Backend& backend, const PromptSpec& neutral,
                   const std::map<std::uint32_t, Direction>& directions,
                   const std::vector<std::uint32_t>& steps, const AttributeClassifier& classifier,
                   const SweepConfig& config) {
  if (steps.empty() || config.omega_grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sweep grids must be non-empty");
  }
  if (config.eval_seeds.size() < kMinEvalSeeds) {
    throw Error(ErrorCode::kInvalidArgument, "sweep needs >= 10 eval seeds");
  }
  for (auto step : steps) {
    if (!directions.count(step)) {
      throw Error(ErrorCode::kInvalidArgument, "no direction for step " + std::to_string(step));
    }
  }
  classifier.validate();
  classifier.index_of(config.target_label);

  std::vector<std::uint32_t> step_grid = steps;
  std::sort(step_grid.begin(), step_grid.end());
  step_grid.erase(std::unique(step_grid.begin(), step_grid.end()), step_grid.end());
  std::vector<double> omega_grid = config.omega_grid;
  std::sort(omega_grid.begin(), omega_grid.end());
  omega_grid.erase(std::unique(omega_grid.begin(), omega_grid.end()), omega_grid.end());

  SweepOutcome out;
  const auto baseline = batch_generate_all(backend, neutral, config.eval_seeds, {});
  out.baseline_rate = zero_shot_rate(image_inputs(baseline), classifier, config.target_label);
  if (config.reference) {
    const auto stats = GaussianStats::from_samples(sample_features(baseline, config.feature_embedder));
    out.baseline_frechet = frechet_distance(stats, *config.reference);
    out.gate = config.gate_factor * *out.baseline_frechet;
  }

  for (auto step : step_grid) {
    const Direction& d = directions.at(step);
    for (double omega : omega_grid) {
      const SteeringPlan plan = SteeringPlan::single(d, omega);
      const auto runs = batch_generate_all(backend, neutral, config.eval_seeds, {}, &plan);
      SweepResult r;
      r.step = step;
      r.omega = omega;
      r.n_eval = runs.size();
      r.target_rate = zero_shot_rate(image_inputs(runs), classifier, config.target_label);
      if (config.reference) {
        const auto stats = GaussianStats::from_samples(sample_features(runs, config.feature_embedder));
        r.frechet = frechet_distance(stats, *config.reference);
        r.valid = *r.frechet <= *out.gate;
      }
      out.results.push_back(r);
    }
  }
  return out;
}

const char* to_string(SelectionPolicy policy) {
  return policy == SelectionPolicy::kMaxRateGated ? "max_rate_gated" : "min_frechet";
}

SelectionPolicy selection_policy_from_string(const std::string& s) {
  if (s == "max_rate_gated") return SelectionPolicy::kMaxRateGated;
  if (s == "min_frechet") return SelectionPolicy::kMinFrechet;
  throw Error(ErrorCode::kInvalidArgument, "unknown selection policy '" + s + "'");
}

SweepResult select_config(const std::vector<SweepResult>& results, SelectionPolicy policy) {
  std::vector<const SweepResult*> valid;
  for (const auto& r : results) {
    if (r.valid) valid.push_back(&r);
  }
  if (valid.empty()) {
    throw Error(ErrorCode::kOutOfDistribution, "all configurations out of distribution");
  }
  // Absent frechet sorts after any present value.
  auto fd = [](const SweepResult* r) { return r->frechet.value_or(HUGE_VAL); };
  auto better = [&](const SweepResult* a, const SweepResult* b) {
    if (policy == SelectionPolicy::kMaxRateGated) {
      return std::make_tuple(-a->target_rate, fd(a), a->omega, a->step) <
             std::make_tuple(-b->target_rate, fd(b), b->omega, b->step);
    }
    return std::make_tuple(fd(a), -a->target_rate, a->omega, a->step) <
           std::make_tuple(fd(b), -b->target_rate, b->omega, b->step);
  };
  if (policy == SelectionPolicy::kMinFrechet &&
      std::none_of(valid.begin(), valid.end(), [](const SweepResult* r) { return r->frechet.has_value(); })) {
    throw Error(ErrorCode::kInvalidArgument, "min_frechet needs sweep results with frechet");
  }
  return **std::min_element(valid.begin(), valid.end(), better);
}

}  // namespace latsteer
