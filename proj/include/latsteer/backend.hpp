// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latsteer/core.hpp"
#include "latsteer/toy_backend.hpp"
#include "latsteer/transport.hpp"

namespace latsteer {

struct Capabilities {
  bool latent_capture = true;
  bool initial_offset_injection = true;
  bool embedding_offset_hook = false;

  friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

enum class BackendKind { kToy, kExternal };

const char* to_string(BackendKind kind);

struct BackendDescriptor {
  std::string backend_id;
  BackendKind kind = BackendKind::kToy;
  Shape latent_shape;
  std::uint32_t k = 0;
  Capabilities capabilities;

  // latent_capture and initial_offset_injection are mandatory.
  void validate() const;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct GenerateOptions {
  // Opaque per-backend payload for text-embedding edits; requires the
  // embedding_offset_hook capability when non-empty.
  std::string embedding_offset;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  // True when generate() may be called from several threads at once.
  virtual bool concurrent_generate() const { return false; }

  // Capture steps within 0..k, plan shape and required capabilities.
  void check_request(const CaptureSet& capture, const SteeringPlan* plan,
                     const GenerateOptions& options) const;

  // check_request, then the implementation. The plan enters before the
  // first denoising step.
  TrajectoryRecord generate(const PromptSpec& prompt, std::uint64_t seed, const CaptureSet& capture,
                            const SteeringPlan* plan = nullptr, const GenerateOptions& options = {});

 protected:
  virtual TrajectoryRecord run(const PromptSpec& prompt, std::uint64_t seed,
                               const CaptureSet& capture, const SteeringPlan* plan,
                               const GenerateOptions& options) = 0;
};

// Closed-form Gaussian-mixture diffusion; prompts must carry a mixture.
class ToyBackend final : public Backend {
 public:
  ToyBackend(toy::Schedule schedule, std::size_t dim, std::string backend_id = "toy");

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool concurrent_generate() const override { return true; }
  const toy::Schedule& schedule() const { return schedule_; }

 protected:
  TrajectoryRecord run(const PromptSpec& prompt, std::uint64_t seed, const CaptureSet& capture,
                       const SteeringPlan* plan, const GenerateOptions& options) override;

 private:
  toy::Schedule schedule_;
  BackendDescriptor descriptor_;
};

inline constexpr std::chrono::seconds kDefaultExternalTimeout{300};

// Client side of the wire protocol. The descriptor is fetched with a hello
// request on construction.
class ExternalBackend final : public Backend {
 public:
  explicit ExternalBackend(std::unique_ptr<Transport> transport,
                           std::chrono::milliseconds timeout = kDefaultExternalTimeout);

  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  TrajectoryRecord run(const PromptSpec& prompt, std::uint64_t seed, const CaptureSet& capture,
                       const SteeringPlan* plan, const GenerateOptions& options) override;

 private:
  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
  BackendDescriptor descriptor_;
};

struct BatchItem {
  std::uint64_t seed = 0;
  std::optional<TrajectoryRecord> record;
  std::string error;

  bool ok() const { return record.has_value(); }
};

// One entry per seed in seed order; per-seed failures are recorded instead of
// aborting. Duplicate seeds and check_request failures are precondition
// errors. Runs the OpenMP kernel
// when the backend allows concurrent calls.
std::vector<BatchItem> batch_generate(Backend& backend, const PromptSpec& prompt,
                                      const std::vector<std::uint64_t>& seeds,
                                      const CaptureSet& capture, const SteeringPlan* plan = nullptr,
                                      const GenerateOptions& options = {});

// batch_generate, throwing on the first failed seed.
std::vector<TrajectoryRecord> batch_generate_all(Backend& backend, const PromptSpec& prompt,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const CaptureSet& capture,
                                                 const SteeringPlan* plan = nullptr,
                                                 const GenerateOptions& options = {});

// "toy" or "external:<endpoint>" (see transport_from_endpoint).
std::unique_ptr<Backend> make_backend(const std::string& spec, const toy::Schedule& toy_schedule,
                                      std::size_t toy_dim,
                                      std::chrono::milliseconds timeout = kDefaultExternalTimeout);

nlohmann::json descriptor_to_json(const BackendDescriptor& d);
BackendDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace latsteer
