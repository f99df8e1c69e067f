// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "latsteer/bias_report.hpp"
#include "latsteer/core.hpp"
#include "latsteer/learner.hpp"
#include "latsteer/metrics.hpp"
#include "latsteer/toy_backend.hpp"
#include "latsteer/tuner.hpp"

// Content-addressed artifact layout:
//   <root>/artifacts/<kind>/<id>/manifest
//   <root>/artifacts/<kind>/<id>/<payload files>
// The id is the SHA-256 of the payload files (see payload_digest); manifest
// metadata is not part of it.
namespace latsteer {

inline constexpr int kSchemaVersion = 1;

enum class ArtifactKind { kDirection, kDataset, kSweep, kReport, kTrajectory };

const char* to_string(ArtifactKind kind);
ArtifactKind artifact_kind_from_string(const std::string& s);

struct ArtifactManifest {
  int schema_version = kSchemaVersion;
  ArtifactKind kind = ArtifactKind::kDirection;
  std::string id;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::string> payload_refs;

  nlohmann::json to_json() const;
  static ArtifactManifest from_json(const nlohmann::json& j);
};

// Named payload files in manifest order.
using Payloads = std::vector<std::pair<std::string, std::string>>;

// sha256 over "<name>\n<sha256(bytes)>\n" for each payload in order.
std::string payload_digest(const Payloads& payloads);

// Writes manifest + payloads into `dir` (created if needed) and returns the id.
std::string write_artifact(const std::filesystem::path& dir, ArtifactKind kind,
                           const Payloads& payloads, const nlohmann::json& metadata);

struct LoadedArtifact {
  ArtifactManifest manifest;
  Payloads payloads;

  const std::string& payload(const std::string& name) const;
};

// Checks the schema version and kind, that every payload exists (kMissingRef)
// and that the recomputed id matches (kCorruption).
LoadedArtifact read_artifact(const std::filesystem::path& dir, ArtifactKind kind);

// Single-artifact forms working on an explicit directory.
std::string save_direction(const Direction& d, const std::filesystem::path& dir);
Direction load_direction(const std::filesystem::path& dir);

// Encoders shared by the store and tests. Decoders throw kCorruption.
Payloads direction_payloads(const Direction& d);
Direction direction_from_artifact(const LoadedArtifact& a);
Payloads dataset_payloads(const LatentDataset& ds);
LatentDataset dataset_from_artifact(const LoadedArtifact& a);
Payloads trajectory_payloads(const TrajectoryRecord& r);
TrajectoryRecord trajectory_from_artifact(const LoadedArtifact& a);
Payloads sweep_payloads(const SweepTable& t);
SweepTable sweep_from_artifact(const LoadedArtifact& a);
Payloads evaluation_payloads(const EvaluationReport& r);
Payloads bias_report_payloads(const BiasReportDoc& doc);

enum class ReportType { kEvaluation, kBias };

class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path artifact_dir(ArtifactKind kind, const std::string& id) const;

  bool exists(ArtifactKind kind, const std::string& id) const;
  // Manifests of one kind sorted by id. Unreadable entries are skipped.
  std::vector<ArtifactManifest> list(ArtifactKind kind) const;
  // Throws kNotFound.
  LoadedArtifact load(ArtifactKind kind, const std::string& id) const;

  // Stages into a temp directory, then renames it into place. An existing id
  // is left untouched.
  std::string put(ArtifactKind kind, const Payloads& payloads, const nlohmann::json& metadata);

  std::string save_direction(const Direction& d);
  Direction load_direction(const std::string& id) const;

  std::string save_dataset(const LatentDataset& ds);
  LatentDataset load_dataset(const std::string& id) const;

  std::string save_trajectory(const TrajectoryRecord& r);
  TrajectoryRecord load_trajectory(const std::string& id) const;

  std::string save_sweep(const SweepTable& t);
  SweepTable load_sweep(const std::string& id) const;

  std::string save_evaluation(const EvaluationReport& r);
  EvaluationReport load_evaluation(const std::string& id) const;

  std::string save_bias_report(const BiasReportDoc& doc);
  BiasReportDoc load_bias_report(const std::string& id) const;

  ReportType report_type(const std::string& id) const;

 private:
  std::filesystem::path root_;
};

}  // namespace latsteer
