// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "latsteer/backend.hpp"
#include "latsteer/learner.hpp"
#include "latsteer/metrics.hpp"
#include "latsteer/store.hpp"
#include "latsteer/tuner.hpp"

namespace latsteer {

// Every knob of a learn -> sweep -> select -> evaluate run.
struct ExperimentConfig {
  std::string backend = "toy";          // "toy" | "external:<endpoint>"
  toy::Schedule schedule = toy::Schedule::log_snr_linear(30);
  std::size_t dim = 8;                  // toy latent size
  std::string providers = "stub";       // zero-shot classifiers only
  PromptSpec neutral;
  PromptSpec target;
  std::size_t n = kDefaultPerClass;
  CaptureSet capture_steps;
  double c = 1.0;
  std::uint64_t seed_base = 1000;       // dataset seeds
  std::vector<double> omega_grid = default_omega_grid();
  std::size_t eval_n = kDefaultEvalSamples;     // seeds per sweep cell
  std::uint64_t sweep_seed_base = 500000;
  // Reference set for the Frechet gate: the target prompt on its own seeds.
  // 0 disables the gate.
  std::size_t reference_n = 200;
  std::uint64_t reference_seed_base = 700000;
  double gate_factor = kDefaultGateFactor;
  SelectionPolicy policy = SelectionPolicy::kMaxRateGated;
  AttributeClassifier classifier;       // providers attached at run time
  std::string target_label;
  std::size_t evaluate_n = 100;
  std::uint64_t evaluate_seed_base = 900000;
  bool requires_human_evaluation = false;

  // Throws kInvalidArgument naming the offending field. Needs no backend.
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  // Short hash of the canonical JSON; names the experiment.
  std::string experiment_id() const;
};

// dim 8, k 30, classes N(-3u, I) ("majority") and N(+3u, I) ("minority")
// with u = 1/sqrt(8) * ones. The neutral prompt puts 5% weight on the
// minority class, the target prompt all of it. Sweep cells use 100 seeds.
ExperimentConfig default_toy_experiment();

struct ExperimentSummary {
  std::string experiment_id;
  bool ok = false;
  std::vector<std::string> completed_stages;
  std::string failed_stage;
  std::string error;
  std::map<std::uint32_t, std::string> dataset_ids;
  std::map<std::uint32_t, std::string> direction_ids;
  std::vector<std::pair<std::uint32_t, double>> separability;
  std::string sweep_id;
  std::optional<SweepResult> selected;
  std::string report_id;
  std::optional<EvaluationReport> report;

  nlohmann::json to_json() const;
  static ExperimentSummary from_json(const nlohmann::json& j);
};

// One line: experiment, prompt, step, omega, baseline rate, steered rate, SPD.
std::string spd_row(const ExperimentSummary& summary);

// Runs datasets -> fits -> sweep -> selection -> evaluation, persisting each
// stage into `store`. A failing stage ends the run; the summary names it and
// keeps everything finished before it.
ExperimentSummary run_experiment(const ExperimentConfig& config, ArtifactStore& store,
                                 std::int64_t created_at = 0);

// Sweeps the config's neutral prompt over `directions` (step -> direction)
// and applies the selection policy. `selected` stays empty when every cell
// fails the gate.
SweepTable run_config_sweep(const ExperimentConfig& config, Backend& backend,
                            const AttributeClassifier& classifier,
                            const std::map<std::uint32_t, Direction>& directions,
                            const std::map<std::uint32_t, std::string>& direction_refs);

// <root>/experiments/<id>/{config.json,summary.json}.
std::filesystem::path experiment_dir(const std::filesystem::path& root, const std::string& experiment_id);
void persist_summary(const std::filesystem::path& root, const ExperimentConfig& config,
                     const ExperimentSummary& summary);

// Exclusive advisory lock (flock) on <root>/experiments/<id>/lock. Throws
// kBusy when another process or thread holds it.
class ExperimentLock {
 public:
  ExperimentLock(const std::filesystem::path& root, const std::string& experiment_id);
  ~ExperimentLock();
  ExperimentLock(const ExperimentLock&) = delete;
  ExperimentLock& operator=(const ExperimentLock&) = delete;

 private:
  int fd_ = -1;
};

// "toy:neutral" / "toy:target" (the default toy prompts) or "text:<prompt>".
PromptSpec builtin_prompt(const std::string& name);

// Plan from stored directions: (direction id, omega) pairs.
SteeringPlan plan_from_store(const ArtifactStore& store,
                             const std::vector<std::pair<std::string, double>>& terms);

// Builds the backend named by the config.
std::unique_ptr<Backend> make_experiment_backend(const ExperimentConfig& config);

// Attaches providers to zero-shot classifiers.
AttributeClassifier attach_providers(AttributeClassifier classifier, const std::string& providers);

}  // namespace latsteer
