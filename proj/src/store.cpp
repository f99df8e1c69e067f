// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>

#include "latsteer/serialization.hpp"
#include "latsteer/tensor_io.hpp"

namespace latsteer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest";

const char* const kKindNames[] = {"direction", "dataset", "sweep", "report", "trajectory"};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse(const std::string& bytes, const std::string& what) {
  try {
    return json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruption, what + ": " + e.what());
  }
}

// Decoding errors in a payload mean the artifact is damaged.
template <typename F>
auto decoding(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruption) throw;
    throw Error(ErrorCode::kCorruption, what + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruption, what + ": " + e.what());
  }
}

}  // namespace

const char* to_string(ArtifactKind kind) { return kKindNames[static_cast<int>(kind)]; }

ArtifactKind artifact_kind_from_string(const std::string& s) {
  for (int i = 0; i < 5; ++i) {
    if (s == kKindNames[i]) return static_cast<ArtifactKind>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown artifact kind '" + s + "'");
}

json ArtifactManifest::to_json() const {
  return {{"schema_version", schema_version},
          {"kind", latsteer::to_string(kind)},
          {"id", id},
          {"metadata", metadata},
          {"payload_refs", payload_refs}};
}

ArtifactManifest ArtifactManifest::from_json(const json& j) {
  ArtifactManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kSchemaVersion) {
      throw Error(ErrorCode::kBadVersion,
                  "manifest schema_version " + std::to_string(m.schema_version) + " unsupported");
    }
    m.kind = artifact_kind_from_string(j.at("kind").get<std::string>());
    m.id = j.at("id").get<std::string>();
    m.metadata = j.value("metadata", json::object());
    m.payload_refs = j.at("payload_refs").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruption, std::string("manifest: ") + e.what());
  }
  for (const auto& ref : m.payload_refs) {
    if (ref.empty() || ref == kManifest || ref.find('/') != std::string::npos || ref[0] == '.') {
      throw Error(ErrorCode::kCorruption, "manifest: bad payload ref '" + ref + "'");
    }
  }
  return m;
}

std::string payload_digest(const Payloads& payloads) {
  std::string buf;
  for (const auto& [name, bytes] : payloads) {
    buf += name;
    buf += '\n';
    buf += tensor_io::sha256_hex(bytes);
    buf += '\n';
  }
  return tensor_io::sha256_hex(buf);
}

std::string write_artifact(const fs::path& dir, ArtifactKind kind, const Payloads& payloads,
                           const json& metadata) {
  if (payloads.empty()) throw Error(ErrorCode::kInvalidArgument, "artifact has no payloads");
  fs::create_directories(dir);
  ArtifactManifest m;
  m.kind = kind;
  m.id = payload_digest(payloads);
  m.metadata = metadata;
  for (const auto& [name, bytes] : payloads) {
    m.payload_refs.push_back(name);
    tensor_io::write_file_atomic(dir / name, bytes);
  }
  tensor_io::write_file_atomic(dir / kManifest, dump(m.to_json()));
  return m.id;
}

const std::string& LoadedArtifact::payload(const std::string& name) const {
  for (const auto& [n, bytes] : payloads) {
    if (n == name) return bytes;
  }
  throw Error(ErrorCode::kMissingRef, "artifact " + manifest.id + " has no payload '" + name + "'");
}

LoadedArtifact read_artifact(const fs::path& dir, ArtifactKind kind) {
  if (!fs::exists(dir / kManifest)) {
    throw Error(ErrorCode::kNotFound, "no manifest in " + dir.string());
  }
  LoadedArtifact a;
  a.manifest = ArtifactManifest::from_json(parse(tensor_io::read_file(dir / kManifest), "manifest"));
  if (a.manifest.kind != kind) {
    throw Error(ErrorCode::kCorruption, std::string("expected a ") + to_string(kind) +
                                            " artifact, manifest says " + to_string(a.manifest.kind));
  }
  for (const auto& ref : a.manifest.payload_refs) {
    if (!fs::exists(dir / ref)) {
      throw Error(ErrorCode::kMissingRef, "payload '" + ref + "' of " + a.manifest.id + " is missing");
    }
    a.payloads.emplace_back(ref, tensor_io::read_file(dir / ref));
  }
  if (payload_digest(a.payloads) != a.manifest.id) {
    throw Error(ErrorCode::kCorruption, "content hash mismatch for " + a.manifest.id);
  }
  return a;
}

// ---- direction --------------------------------------------------------------

Payloads direction_payloads(const Direction& d) {
  json p = {{"bias", d.bias},
            {"raw_norm", d.raw_norm},
            {"train_step", d.train_step},
            {"neutral_id", d.neutral_id},
            {"target_id", d.target_id},
            {"n_per_class", d.n_per_class},
            {"cv_accuracy", d.cv_accuracy},
            {"backend_id", d.backend_id}};
  return {{"payload.lstr", tensor_io::encode(d.vector)}, {"provenance.json", dump(p)}};
}

namespace {

json direction_metadata(const Direction& d) {
  return {{"created_at", d.created_at},  {"train_step", d.train_step},
          {"neutral_id", d.neutral_id},  {"target_id", d.target_id},
          {"cv_accuracy", d.cv_accuracy}, {"backend_id", d.backend_id},
          {"latent_shape", d.vector.shape()}};
}

}  // namespace

Direction direction_from_artifact(const LoadedArtifact& a) {
  Direction d = decoding("direction", [&] {
    Direction d;
    d.vector = tensor_io::decode(a.payload("payload.lstr"));
    const json p = parse(a.payload("provenance.json"), "provenance");
    d.bias = p.at("bias").get<double>();
    d.raw_norm = p.at("raw_norm").get<double>();
    d.train_step = p.at("train_step").get<std::uint32_t>();
    d.neutral_id = p.at("neutral_id").get<std::string>();
    d.target_id = p.at("target_id").get<std::string>();
    d.n_per_class = p.at("n_per_class").get<std::uint32_t>();
    d.cv_accuracy = p.at("cv_accuracy").get<double>();
    d.backend_id = p.at("backend_id").get<std::string>();
    d.created_at = a.manifest.metadata.value("created_at", std::int64_t{0});
    return d;
  });
  const double norm = d.vector.l2_norm();
  if (std::abs(norm - 1.0) > 1e-6) {
    throw Error(ErrorCode::kCorruption, "direction norm " + std::to_string(norm) + " is not 1");
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruption, std::string("direction invariant: ") + e.what());
  }
  return d;
}

std::string save_direction(const Direction& d, const fs::path& dir) {
  d.validate();
  return write_artifact(dir, ArtifactKind::kDirection, direction_payloads(d), direction_metadata(d));
}

Direction load_direction(const fs::path& dir) {
  return direction_from_artifact(read_artifact(dir, ArtifactKind::kDirection));
}

// ---- dataset ----------------------------------------------------------------

Payloads dataset_payloads(const LatentDataset& ds) {
  ds.validate();
  const Shape& item_shape = ds.items.front().latent.shape();
  Shape stacked{static_cast<std::uint32_t>(ds.items.size())};
  stacked.insert(stacked.end(), item_shape.begin(), item_shape.end());
  std::vector<float> values;
  values.reserve(shape_size(stacked));
  json items = json::array();
  for (const auto& it : ds.items) {
    if (it.latent.shape() != item_shape) throw Error(ErrorCode::kShapeMismatch, "dataset latents differ in shape");
    values.insert(values.end(), it.latent.values().begin(), it.latent.values().end());
    items.push_back({{"label", it.label == ClassLabel::kTarget ? "target" : "neutral"}, {"seed", it.seed}});
  }
  json meta = {{"step", ds.step},
               {"neutral_id", ds.neutral_id},
               {"target_id", ds.target_id},
               {"backend_id", ds.backend_id},
               {"items", items}};
  return {{"payload.lstr", tensor_io::encode(LatentTensor(std::move(values), stacked))},
          {"dataset.json", dump(meta)}};
}

LatentDataset dataset_from_artifact(const LoadedArtifact& a) {
  return decoding("dataset", [&] {
    const LatentTensor stacked = tensor_io::decode(a.payload("payload.lstr"));
    const json meta = parse(a.payload("dataset.json"), "dataset.json");
    LatentDataset ds;
    ds.step = meta.at("step").get<std::uint32_t>();
    ds.neutral_id = meta.at("neutral_id").get<std::string>();
    ds.target_id = meta.at("target_id").get<std::string>();
    ds.backend_id = meta.at("backend_id").get<std::string>();
    const auto& items = meta.at("items");
    if (stacked.shape().size() < 2 || stacked.shape()[0] != items.size()) {
      throw Error(ErrorCode::kCorruption, "dataset tensor does not match item list");
    }
    const Shape item_shape(stacked.shape().begin() + 1, stacked.shape().end());
    const std::size_t per = shape_size(item_shape);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto label = items[i].at("label").get<std::string>();
      if (label != "neutral" && label != "target") throw Error(ErrorCode::kCorruption, "bad label " + label);
      auto vals = stacked.values().subspan(i * per, per);
      ds.items.push_back({LatentTensor(std::vector<float>(vals.begin(), vals.end()), item_shape),
                          label == "target" ? ClassLabel::kTarget : ClassLabel::kNeutral,
                          items[i].at("seed").get<std::uint64_t>()});
    }
    ds.validate();
    return ds;
  });
}

// ---- trajectory -------------------------------------------------------------

Payloads trajectory_payloads(const TrajectoryRecord& r) {
  if (r.final_sample.empty()) throw Error(ErrorCode::kInvalidArgument, "trajectory has no final sample");
  json steps = json::array();
  Payloads out;
  out.emplace_back("final.lstr", tensor_io::encode(r.final_sample));
  for (const auto& [step, t] : r.snapshots) {
    steps.push_back(step);
    out.emplace_back("snapshot_" + std::to_string(step) + ".lstr", tensor_io::encode(t));
  }
  json meta = {{"prompt_id", r.prompt_id}, {"seed", r.seed}, {"snapshot_steps", steps}, {"image_ref", r.image_ref}};
  out.insert(out.begin(), {"trajectory.json", dump(meta)});
  return out;
}

TrajectoryRecord trajectory_from_artifact(const LoadedArtifact& a) {
  return decoding("trajectory", [&] {
    const json meta = parse(a.payload("trajectory.json"), "trajectory.json");
    TrajectoryRecord r;
    r.prompt_id = meta.at("prompt_id").get<std::string>();
    r.seed = meta.at("seed").get<std::uint64_t>();
    r.image_ref = meta.at("image_ref").get<std::string>();
    r.final_sample = tensor_io::decode(a.payload("final.lstr"));
    for (auto step : meta.at("snapshot_steps").get<std::vector<std::uint32_t>>()) {
      r.snapshots[step] = tensor_io::decode(a.payload("snapshot_" + std::to_string(step) + ".lstr"));
    }
    return r;
  });
}

// ---- sweep ------------------------------------------------------------------

Payloads sweep_payloads(const SweepTable& t) {
  json rows = json::array();
  for (const auto& r : t.outcome.results) rows.push_back(codec::to_json(r));
  json refs = json::object();
  for (const auto& [step, id] : t.direction_refs) refs[std::to_string(step)] = id;
  json j = {{"prompt_id", t.prompt_id},
            {"target_label", t.target_label},
            {"direction_refs", refs},
            {"results", rows},
            {"baseline_rate", t.outcome.baseline_rate},
            {"baseline_frechet", t.outcome.baseline_frechet ? json(*t.outcome.baseline_frechet) : json(nullptr)},
            {"gate", t.outcome.gate ? json(*t.outcome.gate) : json(nullptr)},
            {"policy", to_string(t.policy)},
            {"selected", t.selected ? codec::to_json(*t.selected) : json(nullptr)}};
  return {{"sweep.json", dump(j)}};
}

SweepTable sweep_from_artifact(const LoadedArtifact& a) {
  return decoding("sweep", [&] {
    const json j = parse(a.payload("sweep.json"), "sweep.json");
    SweepTable t;
    t.prompt_id = j.at("prompt_id").get<std::string>();
    t.target_label = j.at("target_label").get<std::string>();
    for (const auto& [step, id] : j.at("direction_refs").items()) {
      t.direction_refs[static_cast<std::uint32_t>(std::stoul(step))] = id.get<std::string>();
    }
    for (const auto& r : j.at("results")) t.outcome.results.push_back(codec::sweep_result_from_json(r));
    t.outcome.baseline_rate = j.at("baseline_rate").get<double>();
    if (!j.at("baseline_frechet").is_null()) t.outcome.baseline_frechet = j.at("baseline_frechet").get<double>();
    if (!j.at("gate").is_null()) t.outcome.gate = j.at("gate").get<double>();
    t.policy = selection_policy_from_string(j.at("policy").get<std::string>());
    if (!j.at("selected").is_null()) t.selected = codec::sweep_result_from_json(j.at("selected"));
    return t;
  });
}

// ---- reports ----------------------------------------------------------------

Payloads evaluation_payloads(const EvaluationReport& r) {
  json j = codec::to_json(r);
  j["report_type"] = "evaluation";
  return {{"report.json", dump(j)}};
}

Payloads bias_report_payloads(const BiasReportDoc& doc) {
  json j = report_to_json(doc);
  j["report_type"] = "bias";
  return {{"report.json", dump(j)}};
}

// ---- store ------------------------------------------------------------------

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {}

fs::path ArtifactStore::artifact_dir(ArtifactKind kind, const std::string& id) const {
  return root_ / "artifacts" / to_string(kind) / id;
}

bool ArtifactStore::exists(ArtifactKind kind, const std::string& id) const {
  if (id.empty() || id.find('/') != std::string::npos || id[0] == '.') return false;
  return fs::exists(artifact_dir(kind, id) / kManifest);
}

std::vector<ArtifactManifest> ArtifactStore::list(ArtifactKind kind) const {
  std::vector<ArtifactManifest> out;
  const fs::path dir = root_ / "artifacts" / to_string(kind);
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.starts_with(".")) continue;
    try {
      auto m = ArtifactManifest::from_json(parse(tensor_io::read_file(entry.path() / kManifest), "manifest"));
      if (m.kind == kind && m.id == name) out.push_back(std::move(m));
    } catch (const std::exception&) {
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

LoadedArtifact ArtifactStore::load(ArtifactKind kind, const std::string& id) const {
  if (!exists(kind, id)) {
    throw Error(ErrorCode::kNotFound, std::string(to_string(kind)) + " '" + id + "' not found");
  }
  auto a = read_artifact(artifact_dir(kind, id), kind);
  if (a.manifest.id != id) throw Error(ErrorCode::kCorruption, "artifact directory " + id + " holds " + a.manifest.id);
  return a;
}

std::string ArtifactStore::put(ArtifactKind kind, const Payloads& payloads, const json& metadata) {
  const std::string id = payload_digest(payloads);
  if (exists(kind, id)) return id;
  const fs::path kind_dir = root_ / "artifacts" / to_string(kind);
  fs::create_directories(kind_dir);
  static std::atomic<std::uint64_t> counter{0};
  const fs::path staging =
      kind_dir / (".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + id.substr(0, 12));
  try {
    write_artifact(staging, kind, payloads, metadata);
    std::error_code ec;
    fs::rename(staging, kind_dir / id, ec);
    // Losing a rename race to an identical write is fine.
    if (ec) fs::remove_all(staging);
    if (ec && !exists(kind, id)) throw Error(ErrorCode::kIo, "cannot publish " + id + ": " + ec.message());
  } catch (...) {
    std::error_code ignore;
    fs::remove_all(staging, ignore);
    throw;
  }
  return id;
}

std::string ArtifactStore::save_direction(const Direction& d) {
  d.validate();
  return put(ArtifactKind::kDirection, direction_payloads(d), direction_metadata(d));
}

Direction ArtifactStore::load_direction(const std::string& id) const {
  return direction_from_artifact(load(ArtifactKind::kDirection, id));
}

std::string ArtifactStore::save_dataset(const LatentDataset& ds) {
  return put(ArtifactKind::kDataset, dataset_payloads(ds),
             {{"step", ds.step}, {"neutral_id", ds.neutral_id}, {"target_id", ds.target_id},
              {"n_items", ds.items.size()}});
}

LatentDataset ArtifactStore::load_dataset(const std::string& id) const {
  return dataset_from_artifact(load(ArtifactKind::kDataset, id));
}

std::string ArtifactStore::save_trajectory(const TrajectoryRecord& r) {
  return put(ArtifactKind::kTrajectory, trajectory_payloads(r), {{"prompt_id", r.prompt_id}, {"seed", r.seed}});
}

TrajectoryRecord ArtifactStore::load_trajectory(const std::string& id) const {
  return trajectory_from_artifact(load(ArtifactKind::kTrajectory, id));
}

std::string ArtifactStore::save_sweep(const SweepTable& t) {
  return put(ArtifactKind::kSweep, sweep_payloads(t),
             {{"prompt_id", t.prompt_id}, {"target_label", t.target_label}, {"n_results", t.outcome.results.size()}});
}

SweepTable ArtifactStore::load_sweep(const std::string& id) const {
  return sweep_from_artifact(load(ArtifactKind::kSweep, id));
}

std::string ArtifactStore::save_evaluation(const EvaluationReport& r) {
  return put(ArtifactKind::kReport, evaluation_payloads(r),
             {{"report_type", "evaluation"}, {"prompt_id", r.prompt_id}, {"spd", r.spd}});
}

ReportType ArtifactStore::report_type(const std::string& id) const {
  const auto a = load(ArtifactKind::kReport, id);
  const json j = parse(a.payload("report.json"), "report.json");
  const auto type = j.value("report_type", std::string{});
  if (type == "evaluation") return ReportType::kEvaluation;
  if (type == "bias") return ReportType::kBias;
  throw Error(ErrorCode::kCorruption, "report " + id + " has unknown report_type '" + type + "'");
}

EvaluationReport ArtifactStore::load_evaluation(const std::string& id) const {
  const auto a = load(ArtifactKind::kReport, id);
  const json j = parse(a.payload("report.json"), "report.json");
  if (j.value("report_type", std::string{}) != "evaluation") {
    throw Error(ErrorCode::kInvalidArgument, "report " + id + " is not an evaluation report");
  }
  return decoding("report", [&] { return codec::evaluation_from_json(j); });
}

std::string ArtifactStore::save_bias_report(const BiasReportDoc& doc) {
  return put(ArtifactKind::kReport, bias_report_payloads(doc),
             {{"report_type", "bias"}, {"concept", doc.concept_name}, {"n_images", doc.n_images}});
}

BiasReportDoc ArtifactStore::load_bias_report(const std::string& id) const {
  const auto a = load(ArtifactKind::kReport, id);
  const json j = parse(a.payload("report.json"), "report.json");
  if (j.value("report_type", std::string{}) != "bias") {
    throw Error(ErrorCode::kInvalidArgument, "report " + id + " is not a bias report");
  }
  return decoding("report", [&] { return report_from_json(j); });
}

}  // namespace latsteer
