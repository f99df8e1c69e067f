// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/learner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace latsteer {

void LatentDataset::validate() const {
  if (count(ClassLabel::kNeutral) < 2 || count(ClassLabel::kTarget) < 2) {
    throw Error(ErrorCode::kInvalidArgument, "dataset needs >= 2 items per label");
  }
  const auto& shape = items.front().latent.shape();
  std::set<std::pair<std::uint64_t, int>> seen;
  for (const auto& item : items) {
    if (item.latent.shape() != shape) {
      throw Error(ErrorCode::kShapeMismatch, "dataset latents differ in shape");
    }
    if (!seen.insert({item.seed, static_cast<int>(item.label)}).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate (seed, label) in dataset");
    }
  }
}

std::size_t LatentDataset::count(ClassLabel label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const LatentItem& i) { return i.label == label; }));
}

std::vector<std::uint64_t> LatentDataset::seeds_used() const {
  std::vector<std::uint64_t> s;
  for (const auto& i : items) s.push_back(i.seed);
  return s;
}

double LinearSvmModel::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace

LinearSvmModel train_linear_svm(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y, const SvmOptions& options) {
  if (x.empty() || x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "svm needs one label per example");
  }
  if (!(options.c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "svm C must be positive");
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();

  // w holds the feature weights followed by the bias weight.
  std::vector<double> w(d + 1, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != d) throw Error(ErrorCode::kShapeMismatch, "svm rows differ in length");
    qii[i] = dot(x[i], x[i]);
    sq_sum += qii[i];
  }
  // Constant feature: the RMS row norm, or 1 for all-zero data.
  const double s = sq_sum > 0.0 ? std::sqrt(sq_sum / static_cast<double>(n)) : 1.0;
  for (auto& q : qii) q += s * s;
  auto margin_of = [&](std::size_t i) {
    return y[i] * (dot(std::span<const double>(w).first(d), x[i]) + w[d] * s);
  };

  LinearSvmModel model;
  const double c = options.c;
  for (std::uint32_t pass = 1; pass <= options.max_passes; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = margin_of(i) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] >= c) {
        pg = std::max(g, 0.0);
      }
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
      const double delta = (alpha[i] - old) * y[i];
      for (std::size_t j = 0; j < d; ++j) w[j] += delta * x[i][j];
      w[d] += delta * s;
    }
    const double wsq = dot(w, w);
    double hinge = 0.0, alpha_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      hinge += std::max(0.0, 1.0 - margin_of(i));
      alpha_sum += alpha[i];
    }
    model.primal = 0.5 * wsq + c * hinge;
    model.duality_gap = model.primal - (alpha_sum - 0.5 * wsq);
    model.passes = pass;
    if (model.duality_gap <= options.tolerance * std::max(1.0, std::abs(model.primal))) break;
  }
  model.bias = w[d] * s;
  model.bias_feature = s;
  w.pop_back();
  model.weights = std::move(w);
  return model;
}

namespace {

void to_features(const LatentDataset& ds, std::vector<std::vector<double>>& x, std::vector<int>& y) {
  x.clear();
  y.clear();
  for (const auto& item : ds.items) {
    x.push_back(item.latent.to_doubles());
    y.push_back(item.label == ClassLabel::kTarget ? 1 : -1);
  }
}

bool all_identical(const std::vector<std::vector<double>>& x) {
  return std::all_of(x.begin(), x.end(), [&](const auto& row) { return row == x.front(); });
}

}  // namespace

double cross_validate(const LatentDataset& dataset, const SvmOptions& options, std::uint32_t folds) {
  dataset.validate();
  if (folds < 2) throw Error(ErrorCode::kInvalidArgument, "cross-validation needs >= 2 folds");
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  to_features(dataset, x, y);
  std::size_t correct = 0, total = 0;
  for (std::uint32_t f = 0; f < folds; ++f) {
    std::vector<std::vector<double>> tx;
    std::vector<int> ty;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i % folds != f) {
        tx.push_back(x[i]);
        ty.push_back(y[i]);
      }
    }
    if (tx.empty() || tx.size() == x.size()) continue;
    const auto model = train_linear_svm(tx, ty, options);
    for (std::size_t i = f; i < x.size(); i += folds) {
      const int pred = model.decision(x[i]) > 0.0 ? 1 : -1;
      correct += pred == y[i];
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

std::map<std::uint32_t, LatentDataset> build_dataset(Backend& backend, const PromptSpec& neutral,
                                                     const PromptSpec& target, std::size_t n,
                                                     const CaptureSet& capture_steps,
                                                     std::uint64_t seed_base) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "build_dataset needs n >= 2 per prompt");
  if (capture_steps.empty()) throw Error(ErrorCode::kInvalidArgument, "no capture steps given");
  std::vector<std::uint64_t> neutral_seeds(n), target_seeds(n);
  for (std::size_t j = 0; j < n; ++j) {
    neutral_seeds[j] = seed_base + j;
    target_seeds[j] = seed_base + n + j;
  }
  const auto neutral_runs = batch_generate_all(backend, neutral, neutral_seeds, capture_steps);
  const auto target_runs = batch_generate_all(backend, target, target_seeds, capture_steps);

  std::map<std::uint32_t, LatentDataset> out;
  for (auto step : capture_steps) {
    LatentDataset ds;
    ds.step = step;
    ds.neutral_id = neutral.id;
    ds.target_id = target.id;
    ds.backend_id = backend.descriptor().backend_id;
    ds.items.reserve(2 * n);
    for (const auto& r : neutral_runs) ds.items.push_back({r.snapshots.at(step), ClassLabel::kNeutral, r.seed});
    for (const auto& r : target_runs) ds.items.push_back({r.snapshots.at(step), ClassLabel::kTarget, r.seed});
    out.emplace(step, std::move(ds));
  }
  return out;
}

DirectionFit fit_direction(const LatentDataset& dataset, double c, std::int64_t created_at) {
  dataset.validate();
  const SvmOptions options{c};
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  to_features(dataset, x, y);

  const double cv = cross_validate(dataset, options);
  const auto model = train_linear_svm(x, y, options);
  const double wnorm = std::sqrt(dot(model.weights, model.weights));
  if (all_identical(x) || !(wnorm > 0.0)) {
    throw Error(ErrorCode::kDegenerate, "inseparable/degenerate data at step " +
                                            std::to_string(dataset.step) +
                                            " (cv_accuracy=" + std::to_string(cv) + ")");
  }

  std::vector<double> w = model.weights;
  double b = model.bias;
  double target_mean = 0.0, neutral_mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = dot(w, x[i]);
    (y[i] > 0 ? target_mean : neutral_mean) += s;
  }
  target_mean /= static_cast<double>(dataset.count(ClassLabel::kTarget));
  neutral_mean /= static_cast<double>(dataset.count(ClassLabel::kNeutral));
  if (target_mean == neutral_mean) {
    throw Error(ErrorCode::kDegenerate, "inseparable/degenerate data at step " +
                                            std::to_string(dataset.step) +
                                            ": classes score identically (cv_accuracy=" +
                                            std::to_string(cv) + ")");
  }
  if (target_mean < neutral_mean) {
    for (auto& v : w) v = -v;
    b = -b;
  }

  const Shape& shape = dataset.items.front().latent.shape();
  // Normalized in double so the stored vector is the float32 rounding of
  // w / |w|.
  std::vector<double> unit(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) unit[j] = w[j] / wnorm;

  DirectionFit out;
  out.direction.vector = LatentTensor::from_doubles(unit, shape);
  out.direction.bias = b / wnorm;
  out.direction.raw_norm = wnorm;
  out.direction.train_step = dataset.step;
  out.direction.neutral_id = dataset.neutral_id;
  out.direction.target_id = dataset.target_id;
  out.direction.n_per_class = static_cast<std::uint32_t>(
      std::min(dataset.count(ClassLabel::kNeutral), dataset.count(ClassLabel::kTarget)));
  out.direction.cv_accuracy = cv;
  out.direction.backend_id = dataset.backend_id;
  out.direction.created_at = created_at;

  out.fit.weight_vector = w;
  out.fit.bias = b;
  out.fit.c = c;
  out.fit.cv_accuracy = cv;
  out.fit.margin = 1.0 / wnorm;
  out.fit.n_iterations = model.passes;
  return out;
}

std::vector<std::pair<std::uint32_t, double>> separability_profile(
    const std::map<std::uint32_t, LatentDataset>& datasets, double c) {
  if (datasets.empty()) throw Error(ErrorCode::kInvalidArgument, "no datasets for profile");
  std::vector<std::pair<std::uint32_t, double>> out;
  for (const auto& [step, ds] : datasets) out.emplace_back(step, cross_validate(ds, SvmOptions{c}));
  return out;
}

}  // namespace latsteer
