// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "latsteer/core.hpp"
#include "latsteer/protocol.hpp"

// Test double for the external protocol. Generate requests echo the
// injected initial latent: z_T is drawn from the counter-based generator,
// the transmitted offset is added, and the result is returned as every
// requested snapshot and as the final sample. Embed/detect requests are
// answered by the stub providers.
namespace latsteer::stub {

struct EchoConfig {
  std::string backend_id = "echo-stub";
  Shape latent_shape{8};
  std::uint32_t k = 1;
  bool embedding_offset_hook = true;
  std::size_t embedding_dim = 64;
};

wire::Message handle(const wire::Message& request, const EchoConfig& config = {});

}  // namespace latsteer::stub
