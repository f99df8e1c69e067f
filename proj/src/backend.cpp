// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/backend.hpp"

#include <unordered_set>

#include "latsteer/parallel.hpp"
#include "latsteer/tensor_io.hpp"

namespace latsteer {

const char* to_string(BackendKind kind) { return kind == BackendKind::kToy ? "toy" : "external"; }

void BackendDescriptor::validate() const {
  if (backend_id.empty()) throw Error(ErrorCode::kInvalidArgument, "backend id is empty");
  if (latent_shape.empty() || shape_size(latent_shape) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "backend latent shape is empty");
  }
  if (!capabilities.latent_capture || !capabilities.initial_offset_injection) {
    throw Error(ErrorCode::kUnsupported,
                "backend '" + backend_id +
                    "' lacks a mandatory capability (latent capture, initial offset injection)");
  }
}

void Backend::check_request(const CaptureSet& capture, const SteeringPlan* plan,
                            const GenerateOptions& options) const {
  const auto& desc = descriptor();
  for (auto step : capture) {
    if (step > desc.k) {
      throw Error(ErrorCode::kOutOfRange, "capture step " + std::to_string(step) + " outside 0.." +
                                              std::to_string(desc.k));
    }
  }
  if (plan) {
    if (!desc.capabilities.initial_offset_injection) {
      throw Error(ErrorCode::kUnsupported, "backend cannot inject an initial offset");
    }
    if (plan->latent_shape() != desc.latent_shape) {
      throw Error(ErrorCode::kShapeMismatch, "plan shape " + shape_to_string(plan->latent_shape()) +
                                                 " vs backend latent shape " +
                                                 shape_to_string(desc.latent_shape));
    }
  }
  if (!options.embedding_offset.empty() && !desc.capabilities.embedding_offset_hook) {
    throw Error(ErrorCode::kUnsupported, "backend has no embedding offset hook");
  }
}

TrajectoryRecord Backend::generate(const PromptSpec& prompt, std::uint64_t seed,
                                   const CaptureSet& capture, const SteeringPlan* plan,
                                   const GenerateOptions& options) {
  check_request(capture, plan, options);
  return run(prompt, seed, capture, plan, options);
}

ToyBackend::ToyBackend(toy::Schedule schedule, std::size_t dim, std::string backend_id)
    : schedule_(std::move(schedule)) {
  schedule_.validate();
  descriptor_.backend_id = std::move(backend_id);
  descriptor_.kind = BackendKind::kToy;
  descriptor_.latent_shape = {static_cast<std::uint32_t>(dim)};
  descriptor_.k = schedule_.k;
  descriptor_.validate();
}

TrajectoryRecord ToyBackend::run(const PromptSpec& prompt, std::uint64_t seed,
                                 const CaptureSet& capture, const SteeringPlan* plan,
                                 const GenerateOptions&) {
  if (!prompt.mixture) {
    throw Error(ErrorCode::kInvalidArgument, "toy backend needs a mixture prompt ('" + prompt.id + "')");
  }
  if (prompt.mixture->dim != shape_size(descriptor_.latent_shape)) {
    throw Error(ErrorCode::kShapeMismatch, "prompt '" + prompt.id + "' dim differs from backend");
  }
  LatentTensor z = toy::draw_initial_latent(descriptor_.latent_shape, seed);
  if (plan) z = apply_plan(z, *plan);
  return toy::run_reverse(*prompt.mixture, schedule_, z, capture, prompt.id, seed);
}

ExternalBackend::ExternalBackend(std::unique_ptr<Transport> transport,
                                 std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {
  const auto resp = transport_->exchange(wire::request(wire::OpCode::kHello), timeout_);
  wire::throw_if_error(resp);
  descriptor_ = descriptor_from_json(resp.header.at("descriptor"));
  descriptor_.kind = BackendKind::kExternal;
  descriptor_.validate();
}

TrajectoryRecord ExternalBackend::run(const PromptSpec& prompt, std::uint64_t seed,
                                      const CaptureSet& capture, const SteeringPlan* plan,
                                      const GenerateOptions& options) {
  nlohmann::json h = {
      {"prompt_id", prompt.id},
      {"text", prompt.text},
      {"seed", seed},
      {"capture", std::vector<std::uint32_t>(capture.begin(), capture.end())},
      {"sampler_params", prompt.sampler_params},
      {"offset_blob", -1},
      {"embedding_offset_blob", -1},
  };
  std::vector<std::string> blobs;
  if (plan) {
    h["offset_blob"] = blobs.size();
    blobs.push_back(tensor_io::encode(plan_offset(*plan)));
  }
  if (!options.embedding_offset.empty()) {
    h["embedding_offset_blob"] = blobs.size();
    blobs.push_back(options.embedding_offset);
  }
  const auto resp =
      transport_->exchange(wire::request(wire::OpCode::kGenerate, std::move(h), std::move(blobs)), timeout_);
  wire::throw_if_error(resp);
  if (resp.opcode() != wire::OpCode::kGenerate) {
    throw Error(ErrorCode::kProtocol, "unexpected response op");
  }
  const auto steps = resp.header.at("snapshot_steps").get<std::vector<std::uint32_t>>();
  if (resp.blobs.size() != steps.size() + 1) {
    throw Error(ErrorCode::kProtocol, "generate response blob count mismatch");
  }
  TrajectoryRecord rec;
  rec.prompt_id = prompt.id;
  rec.seed = seed;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    rec.snapshots.emplace(steps[i], tensor_io::decode(resp.blobs[i]));
  }
  rec.final_sample = tensor_io::decode(resp.blobs.back());
  rec.image_ref = resp.header.value("image_ref", std::string());
  for (auto step : capture) {
    if (!rec.snapshots.count(step)) {
      throw Error(ErrorCode::kProtocol, "backend omitted snapshot " + std::to_string(step));
    }
  }
  return rec;
}

std::vector<BatchItem> batch_generate(Backend& backend, const PromptSpec& prompt,
                                      const std::vector<std::uint64_t>& seeds,
                                      const CaptureSet& capture, const SteeringPlan* plan,
                                      const GenerateOptions& options) {
  std::unordered_set<std::uint64_t> seen;
  for (auto s : seeds) {
    if (!seen.insert(s).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate seed " + std::to_string(s) + " in batch");
    }
  }
  backend.check_request(capture, plan, options);
  if (backend.concurrent_generate()) {
    return parallel::generate_batch(backend, prompt, seeds, capture, plan, options);
  }
  return parallel::reference::generate_batch(backend, prompt, seeds, capture, plan, options);
}

std::vector<TrajectoryRecord> batch_generate_all(Backend& backend, const PromptSpec& prompt,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const CaptureSet& capture, const SteeringPlan* plan,
                                                 const GenerateOptions& options) {
  auto items = batch_generate(backend, prompt, seeds, capture, plan, options);
  std::vector<TrajectoryRecord> out;
  out.reserve(items.size());
  for (auto& item : items) {
    if (!item.ok()) {
      throw Error(ErrorCode::kBackend, "prompt '" + prompt.id + "' seed " +
                                           std::to_string(item.seed) + ": " + item.error);
    }
    out.push_back(std::move(*item.record));
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const std::string& spec, const toy::Schedule& toy_schedule,
                                      std::size_t toy_dim, std::chrono::milliseconds timeout) {
  if (spec == "toy") return std::make_unique<ToyBackend>(toy_schedule, toy_dim);
  if (spec.rfind("external:", 0) == 0) {
    return std::make_unique<ExternalBackend>(transport_from_endpoint(spec.substr(9)), timeout);
  }
  throw Error(ErrorCode::kInvalidArgument, "backend must be 'toy' or 'external:<endpoint>'");
}

nlohmann::json descriptor_to_json(const BackendDescriptor& d) {
  return {
      {"backend_id", d.backend_id},
      {"kind", to_string(d.kind)},
      {"latent_shape", d.latent_shape},
      {"k", d.k},
      {"capabilities",
       {{"latent_capture", d.capabilities.latent_capture},
        {"initial_offset_injection", d.capabilities.initial_offset_injection},
        {"embedding_offset_hook", d.capabilities.embedding_offset_hook}}},
  };
}

BackendDescriptor descriptor_from_json(const nlohmann::json& j) {
  try {
    BackendDescriptor d;
    d.backend_id = j.at("backend_id").get<std::string>();
    d.kind = j.at("kind").get<std::string>() == "toy" ? BackendKind::kToy : BackendKind::kExternal;
    d.latent_shape = j.at("latent_shape").get<Shape>();
    d.k = j.at("k").get<std::uint32_t>();
    const auto& caps = j.at("capabilities");
    d.capabilities.latent_capture = caps.at("latent_capture").get<bool>();
    d.capabilities.initial_offset_injection = caps.at("initial_offset_injection").get<bool>();
    d.capabilities.embedding_offset_hook = caps.value("embedding_offset_hook", false);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("bad backend descriptor: ") + e.what());
  }
}

}  // namespace latsteer
