// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/toy_backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "latsteer/rng.hpp"

namespace latsteer::toy {

void Schedule::validate() const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "schedule needs k >= 1");
  if (alpha_bar.size() != static_cast<std::size_t>(k) + 1) {
    throw Error(ErrorCode::kInvalidArgument, "schedule needs k + 1 alpha_bar values");
  }
  if (substeps == 0) throw Error(ErrorCode::kInvalidArgument, "schedule substeps must be >= 1");
  for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
    if (!(alpha_bar[i] > 0.0 && alpha_bar[i] <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "alpha_bar outside (0, 1]");
    }
    if (i > 0 && !(alpha_bar[i] > alpha_bar[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "alpha_bar must be strictly increasing");
    }
  }
  if (alpha_bar.front() > 1e-2 || alpha_bar.back() < 0.99) {
    throw Error(ErrorCode::kInvalidArgument,
                "alpha_bar must run from near 0 (<= 1e-2) to near 1 (>= 0.99)");
  }
}

Schedule Schedule::log_snr_linear(std::uint32_t k, double alpha_min, double alpha_max,
                                  std::uint32_t substeps) {
  Schedule s;
  s.k = k;
  s.substeps = substeps;
  const double lo = std::log(alpha_min / (1.0 - alpha_min));
  const double hi = std::log(alpha_max / (1.0 - alpha_max));
  s.alpha_bar.resize(k + 1);
  for (std::uint32_t i = 0; i <= k; ++i) {
    const double lambda = lo + (hi - lo) * static_cast<double>(i) / k;
    s.alpha_bar[i] = 1.0 / (1.0 + std::exp(-lambda));
  }
  s.validate();
  return s;
}

MixtureSpec marginal_params(const MixtureSpec& spec, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "alpha_bar must lie in (0, 1]");
  }
  MixtureSpec out = spec;
  if (alpha_bar == 1.0) return out;
  const double scale = std::sqrt(alpha_bar);
  for (auto& comp : out.components) {
    for (std::size_t j = 0; j < out.dim; ++j) {
      comp.mean[j] *= scale;
      comp.variance[j] = alpha_bar * comp.variance[j] + (1.0 - alpha_bar);
    }
  }
  return out;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// log w_c + log N(x; m_c, diag v_c) for every component of an
// already-marginalized mixture.
void component_log_terms(const MixtureSpec& m, std::span<const double> x,
                         std::vector<double>& out) {
  out.resize(m.components.size());
  for (std::size_t c = 0; c < m.components.size(); ++c) {
    const auto& comp = m.components[c];
    double acc = std::log(comp.weight);
    for (std::size_t j = 0; j < m.dim; ++j) {
      const double d = x[j] - comp.mean[j];
      acc -= 0.5 * (d * d / comp.variance[j] + std::log(comp.variance[j]) + kLog2Pi);
    }
    out[c] = acc;
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double t : v) s += std::exp(t - top);
  return top + std::log(s);
}

void require_dim(const MixtureSpec& spec, std::span<const double> x) {
  if (x.size() != spec.dim) {
    throw Error(ErrorCode::kShapeMismatch, "point has " + std::to_string(x.size()) +
                                               " coordinates, mixture dim is " +
                                               std::to_string(spec.dim));
  }
}

// Allocation-free score used inside the sampler. Evaluates the same
// quantities as marginal_params + mixture_score.
class ScoreKernel {
 public:
  explicit ScoreKernel(const MixtureSpec& spec) : spec_(spec), log_terms_(spec.components.size()) {}

  void operator()(std::span<const double> x, double alpha_bar, std::span<double> score) {
    const double scale = std::sqrt(alpha_bar);
    const std::size_t dim = spec_.dim;
    for (std::size_t c = 0; c < spec_.components.size(); ++c) {
      const auto& comp = spec_.components[c];
      double acc = std::log(comp.weight);
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = alpha_bar * comp.variance[j] + (1.0 - alpha_bar);
        const double d = x[j] - scale * comp.mean[j];
        acc -= 0.5 * (d * d / v + std::log(v));
      }
      log_terms_[c] = acc;
    }
    const double norm = log_sum_exp(log_terms_);
    std::fill(score.begin(), score.end(), 0.0);
    for (std::size_t c = 0; c < spec_.components.size(); ++c) {
      const double gamma = std::exp(log_terms_[c] - norm);
      if (gamma == 0.0) continue;
      const auto& comp = spec_.components[c];
      for (std::size_t j = 0; j < dim; ++j) {
        const double v = alpha_bar * comp.variance[j] + (1.0 - alpha_bar);
        score[j] -= gamma * (x[j] - scale * comp.mean[j]) / v;
      }
    }
  }

 private:
  const MixtureSpec& spec_;
  std::vector<double> log_terms_;
};

}  // namespace

double log_density(const MixtureSpec& spec, std::span<const double> x, double alpha_bar) {
  require_dim(spec, x);
  const MixtureSpec m = marginal_params(spec, alpha_bar);
  std::vector<double> terms;
  component_log_terms(m, x, terms);
  return log_sum_exp(terms);
}

std::vector<double> mixture_score(const MixtureSpec& spec, std::span<const double> x,
                                  double alpha_bar) {
  require_dim(spec, x);
  const MixtureSpec m = marginal_params(spec, alpha_bar);
  std::vector<double> terms;
  component_log_terms(m, x, terms);
  const double norm = log_sum_exp(terms);
  std::vector<double> score(m.dim, 0.0);
  for (std::size_t c = 0; c < m.components.size(); ++c) {
    const double gamma = std::exp(terms[c] - norm);
    const auto& comp = m.components[c];
    for (std::size_t j = 0; j < m.dim; ++j) {
      score[j] += gamma * (-(x[j] - comp.mean[j]) / comp.variance[j]);
    }
  }
  return score;
}

LatentTensor draw_initial_latent(const Shape& shape, std::uint64_t seed) {
  const std::size_t n = shape_size(shape);
  std::vector<float> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = static_cast<float>(rng::standard_normal(seed, 0, static_cast<std::uint32_t>(j)));
  }
  return LatentTensor(std::move(v), shape);
}

TrajectoryRecord run_reverse(const MixtureSpec& spec, const Schedule& schedule,
                             const LatentTensor& initial, const CaptureSet& capture,
                             std::string prompt_id, std::uint64_t seed) {
  if (initial.size() != spec.dim) {
    throw Error(ErrorCode::kShapeMismatch, "initial latent " + shape_to_string(initial.shape()) +
                                               " vs mixture dim " + std::to_string(spec.dim));
  }
  for (auto step : capture) {
    if (step > schedule.k) {
      throw Error(ErrorCode::kOutOfRange, "capture step " + std::to_string(step) +
                                              " outside 0.." + std::to_string(schedule.k));
    }
  }

  TrajectoryRecord rec;
  rec.prompt_id = std::move(prompt_id);
  rec.seed = seed;
  if (capture.count(0)) rec.snapshots.emplace(0, initial);

  std::vector<double> x = initial.to_doubles();
  std::vector<double> score(x.size());
  ScoreKernel kernel(spec);
  const double m = schedule.substeps;
  for (std::uint32_t i = 0; i < schedule.k; ++i) {
    const double a0 = schedule.alpha_bar[i];
    const double a1 = schedule.alpha_bar[i + 1];
    const double l0 = std::log(a0 / (1.0 - a0));
    // alpha_bar may reach exactly 1 at the data end.
    const double l1 = a1 < 1.0 ? std::log(a1 / (1.0 - a1)) : std::numeric_limits<double>::infinity();
    double a_cur = a0;
    for (std::uint32_t s = 1; s <= schedule.substeps; ++s) {
      double a_next;
      if (s == schedule.substeps) {
        a_next = a1;
      } else if (std::isfinite(l1)) {
        a_next = 1.0 / (1.0 + std::exp(-(l0 + (l1 - l0) * (s / m))));
      } else {
        a_next = std::exp(std::log(a0) * (1.0 - s / m));
      }
      if (a_next == a_cur) continue;
      const double half_dlog = 0.5 * (std::log(a_next) - std::log(a_cur));
      kernel(x, a_cur, score);
      for (std::size_t j = 0; j < x.size(); ++j) x[j] += half_dlog * (x[j] + score[j]);
      a_cur = a_next;
    }
    if (capture.count(i + 1)) rec.snapshots.emplace(i + 1, LatentTensor::from_doubles(x, initial.shape()));
  }
  rec.final_sample = LatentTensor::from_doubles(x, initial.shape());
  return rec;
}

TrajectoryRecord sample_trajectory(const MixtureSpec& spec, const Schedule& schedule,
                                   std::uint64_t seed, const CaptureSet& capture,
                                   const LatentTensor* initial_offset, std::string prompt_id) {
  const Shape shape{static_cast<std::uint32_t>(spec.dim)};
  LatentTensor z = draw_initial_latent(shape, seed);
  if (initial_offset) {
    if (initial_offset->size() != z.size()) {
      throw Error(ErrorCode::kShapeMismatch, "offset shape " +
                                                 shape_to_string(initial_offset->shape()) +
                                                 " vs latent " + shape_to_string(shape));
    }
    std::vector<float> v(z.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = static_cast<float>(static_cast<double>(z[j]) + static_cast<double>((*initial_offset)[j]));
    }
    z = LatentTensor(std::move(v), shape);
  }
  return run_reverse(spec, schedule, z, capture, std::move(prompt_id), seed);
}

BayesLabel bayes_classify(const MixtureSpec& a, const MixtureSpec& b, std::span<const double> x) {
  if (a.dim != b.dim) throw Error(ErrorCode::kShapeMismatch, "classifier specs differ in dim");
  return log_density(b, x) > log_density(a, x) ? BayesLabel::kB : BayesLabel::kA;
}

std::size_t bayes_argmax(std::span<const MixtureSpec* const> specs, std::span<const double> x) {
  if (specs.empty()) throw Error(ErrorCode::kInvalidArgument, "no classes");
  std::size_t best = 0;
  double best_ll = log_density(*specs[0], x);
  for (std::size_t i = 1; i < specs.size(); ++i) {
    const double ll = log_density(*specs[i], x);
    if (ll > best_ll) {
      best = i;
      best_ll = ll;
    }
  }
  return best;
}

}  // namespace latsteer::toy
