// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "json.hpp"
#include "latsteer/core.hpp"
#include "latsteer/learner.hpp"
#include "latsteer/metrics.hpp"
#include "latsteer/toy_backend.hpp"
#include "latsteer/tuner.hpp"

// JSON forms of the domain types. Readers validate and report the offending
// field as a path ("neutral.mixture.components[1].weight").
namespace latsteer::codec {

using nlohmann::json;

// Throws kInvalidArgument naming `path` when `j` lacks `key` or it has the
// wrong type.
const json& field(const json& j, const std::string& key, const std::string& path);
std::string join(const std::string& path, const std::string& key);
std::string join(const std::string& path, std::size_t index);

json to_json(const MixtureSpec& m);
MixtureSpec mixture_from_json(const json& j, const std::string& path = "mixture");

json to_json(const PromptSpec& p);
PromptSpec prompt_from_json(const json& j, const std::string& path = "prompt");

json to_json(const toy::Schedule& s);
toy::Schedule schedule_from_json(const json& j, const std::string& path = "schedule");

// Classifier kind and classes; providers are attached by the caller.
json to_json(const AttributeClassifier& c);
AttributeClassifier classifier_from_json(const json& j, const std::string& path = "classifier");

json to_json(const SweepResult& r);
SweepResult sweep_result_from_json(const json& j, const std::string& path = "result");

json to_json(const GaussianStats& s);
GaussianStats gaussian_stats_from_json(const json& j, const std::string& path = "stats");

json to_json(const EvaluationReport& r);
EvaluationReport evaluation_from_json(const json& j, const std::string& path = "report");

json to_json(const SvmFit& f);
SvmFit svm_fit_from_json(const json& j, const std::string& path = "fit");

// Typed getters.
double get_double(const json& j, const std::string& key, const std::string& path);
std::uint64_t get_u64(const json& j, const std::string& key, const std::string& path);
std::uint32_t get_u32(const json& j, const std::string& key, const std::string& path);
std::string get_string(const json& j, const std::string& key, const std::string& path);
bool get_bool(const json& j, const std::string& key, const std::string& path);
std::vector<double> get_doubles(const json& j, const std::string& key, const std::string& path);

}  // namespace latsteer::codec
