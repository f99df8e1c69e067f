// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/serialization.hpp"

#include <cmath>
#include <limits>

namespace latsteer::codec {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, path + ": " + what);
}

}  // namespace

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string join(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(join(path, key), "missing");
  return *it;
}

double get_double(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number()) bad(join(path, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(join(path, key), "not finite");
  return d;
}

std::uint64_t get_u64(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  bad(join(path, key), "expected a non-negative integer");
}

std::uint32_t get_u32(const json& j, const std::string& key, const std::string& path) {
  const auto v = get_u64(j, key, path);
  if (v > std::numeric_limits<std::uint32_t>::max()) bad(join(path, key), "out of range");
  return static_cast<std::uint32_t>(v);
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_string()) bad(join(path, key), "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_boolean()) bad(join(path, key), "expected a boolean");
  return v.get<bool>();
}

std::vector<double> get_doubles(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  const auto p = join(path, key);
  if (!v.is_array()) bad(p, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) bad(join(p, i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

json to_json(const MixtureSpec& m) {
  json comps = json::array();
  for (const auto& c : m.components) {
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
  }
  return {{"dim", m.dim}, {"components", comps}};
}

MixtureSpec mixture_from_json(const json& j, const std::string& path) {
  MixtureSpec m;
  m.dim = get_u32(j, "dim", path);
  const auto& comps = field(j, "components", path);
  const auto cpath = join(path, "components");
  if (!comps.is_array() || comps.empty()) bad(cpath, "expected a non-empty array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto p = join(cpath, i);
    MixtureComponent c;
    c.weight = get_double(comps[i], "weight", p);
    c.mean = get_doubles(comps[i], "mean", p);
    c.variance = get_doubles(comps[i], "variance", p);
    m.components.push_back(std::move(c));
  }
  try {
    m.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
  return m;
}

json to_json(const PromptSpec& p) {
  json j = {{"id", p.id}, {"role", to_string(p.role)}};
  if (!p.text.empty()) j["text"] = p.text;
  if (p.mixture) j["mixture"] = to_json(*p.mixture);
  if (!p.sampler_params.empty()) j["sampler_params"] = p.sampler_params;
  return j;
}

PromptSpec prompt_from_json(const json& j, const std::string& path) {
  PromptSpec p;
  p.id = get_string(j, "id", path);
  if (j.contains("role")) {
    try {
      p.role = prompt_role_from_string(get_string(j, "role", path));
    } catch (const Error& e) {
      bad(join(path, "role"), e.what());
    }
  }
  if (j.contains("text")) p.text = get_string(j, "text", path);
  if (j.contains("mixture")) p.mixture = mixture_from_json(j.at("mixture"), join(path, "mixture"));
  if (j.contains("sampler_params")) p.sampler_params = get_string(j, "sampler_params", path);
  try {
    p.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
  return p;
}

json to_json(const toy::Schedule& s) {
  return {{"k", s.k}, {"alpha_bar", s.alpha_bar}, {"substeps", s.substeps}};
}

toy::Schedule schedule_from_json(const json& j, const std::string& path) {
  toy::Schedule s;
  s.k = get_u32(j, "k", path);
  if (j.contains("alpha_bar")) {
    s.alpha_bar = get_doubles(j, "alpha_bar", path);
    s.substeps = j.contains("substeps") ? get_u32(j, "substeps", path) : 10;
  } else {
    // Shorthand: {"k": 30} means the default log-SNR-linear schedule.
    const double lo = j.contains("alpha_min") ? get_double(j, "alpha_min", path) : 1e-4;
    const double hi = j.contains("alpha_max") ? get_double(j, "alpha_max", path) : 1.0 - 1e-4;
    const auto sub = j.contains("substeps") ? get_u32(j, "substeps", path) : 10u;
    try {
      s = toy::Schedule::log_snr_linear(s.k, lo, hi, sub);
    } catch (const Error& e) {
      bad(path, e.what());
    }
  }
  try {
    s.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
  return s;
}

json to_json(const AttributeClassifier& c) {
  json classes = json::array();
  for (const auto& cs : c.classes) {
    json e = {{"label", cs.label}};
    if (cs.mixture) e["mixture"] = to_json(*cs.mixture);
    if (!cs.prompt.empty()) e["prompt"] = cs.prompt;
    classes.push_back(e);
  }
  return {{"kind", to_string(c.kind)}, {"classes", classes}};
}

AttributeClassifier classifier_from_json(const json& j, const std::string& path) {
  AttributeClassifier c;
  const auto kind = get_string(j, "kind", path);
  if (kind == "bayes_oracle") {
    c.kind = ClassifierKind::kBayesOracle;
  } else if (kind == "embedding_zero_shot") {
    c.kind = ClassifierKind::kEmbeddingZeroShot;
  } else {
    bad(join(path, "kind"), "unknown classifier kind '" + kind + "'");
  }
  const auto& classes = field(j, "classes", path);
  const auto cpath = join(path, "classes");
  if (!classes.is_array()) bad(cpath, "expected an array");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto p = join(cpath, i);
    ClassSpec cs;
    cs.label = get_string(classes[i], "label", p);
    if (classes[i].contains("mixture")) cs.mixture = mixture_from_json(classes[i].at("mixture"), join(p, "mixture"));
    if (classes[i].contains("prompt")) cs.prompt = get_string(classes[i], "prompt", p);
    c.classes.push_back(std::move(cs));
  }
  if (c.classes.size() < 2) bad(cpath, "need >= 2 classes");
  return c;
}

json to_json(const SweepResult& r) {
  json j = {{"step", r.step}, {"omega", r.omega}, {"target_rate", r.target_rate},
            {"n_eval", r.n_eval}, {"valid", r.valid}};
  j["frechet"] = r.frechet ? json(*r.frechet) : json(nullptr);
  return j;
}

SweepResult sweep_result_from_json(const json& j, const std::string& path) {
  SweepResult r;
  r.step = get_u32(j, "step", path);
  r.omega = get_double(j, "omega", path);
  r.target_rate = get_double(j, "target_rate", path);
  r.n_eval = get_u64(j, "n_eval", path);
  r.valid = get_bool(j, "valid", path);
  if (j.contains("frechet") && !j.at("frechet").is_null()) r.frechet = get_double(j, "frechet", path);
  return r;
}

json to_json(const GaussianStats& s) {
  return {{"mean", s.mean}, {"covariance", s.covariance}, {"n", s.n}};
}

GaussianStats gaussian_stats_from_json(const json& j, const std::string& path) {
  GaussianStats s;
  s.mean = get_doubles(j, "mean", path);
  s.covariance = get_doubles(j, "covariance", path);
  s.n = get_u64(j, "n", path);
  try {
    s.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
  return s;
}

json to_json(const EvaluationReport& r) {
  json config = json::array();
  for (const auto& t : r.config) {
    config.push_back({{"direction_ref", t.direction_ref}, {"train_step", t.train_step}, {"omega", t.omega}});
  }
  return {{"prompt_id", r.prompt_id},
          {"n", r.n},
          {"target_label", r.target_label},
          {"per_label_rate", r.per_label_rate},
          {"baseline_rates", r.baseline_rates},
          {"spd", r.spd},
          {"config", config},
          {"requires_human_evaluation", r.requires_human_evaluation}};
}

namespace {

LabelRates rates_from_json(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  const auto p = join(path, key);
  if (!v.is_object()) bad(p, "expected an object");
  LabelRates out;
  for (const auto& [label, rate] : v.items()) {
    if (!rate.is_number()) bad(join(p, label), "expected a number");
    out[label] = rate.get<double>();
  }
  return out;
}

}  // namespace

EvaluationReport evaluation_from_json(const json& j, const std::string& path) {
  EvaluationReport r;
  r.prompt_id = get_string(j, "prompt_id", path);
  r.n = get_u64(j, "n", path);
  r.target_label = get_string(j, "target_label", path);
  r.per_label_rate = rates_from_json(j, "per_label_rate", path);
  r.baseline_rates = rates_from_json(j, "baseline_rates", path);
  r.spd = get_double(j, "spd", path);
  const auto& config = field(j, "config", path);
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto p = join(join(path, "config"), i);
    r.config.push_back({get_string(config[i], "direction_ref", p), get_u32(config[i], "train_step", p),
                        get_double(config[i], "omega", p)});
  }
  r.requires_human_evaluation = get_bool(j, "requires_human_evaluation", path);
  return r;
}

json to_json(const SvmFit& f) {
  return {{"weight_vector", f.weight_vector}, {"bias", f.bias},
          {"c", f.c},                         {"cv_accuracy", f.cv_accuracy},
          {"margin", f.margin},               {"n_iterations", f.n_iterations}};
}

SvmFit svm_fit_from_json(const json& j, const std::string& path) {
  SvmFit f;
  f.weight_vector = get_doubles(j, "weight_vector", path);
  f.bias = get_double(j, "bias", path);
  f.c = get_double(j, "c", path);
  f.cv_accuracy = get_double(j, "cv_accuracy", path);
  f.margin = get_double(j, "margin", path);
  f.n_iterations = get_u32(j, "n_iterations", path);
  return f;
}

}  // namespace latsteer::codec
