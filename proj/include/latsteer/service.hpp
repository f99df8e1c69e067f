// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "latsteer/toy_backend.hpp"

namespace latsteer {

struct ServiceOptions {
  std::filesystem::path root;
  std::string backend = "toy";  // used by POST /generate
  toy::Schedule schedule = toy::Schedule::log_snr_linear(30);
  std::size_t dim = 8;
  std::string providers = "stub";
};

// JSON-over-HTTP API over an artifact store:
//   GET  /directions, /directions/{id}, /sweeps, /sweeps/{id}, /reports,
//        /reports/{id}, /jobs/{id}
//   POST /generate, /reports (bias reports run inline)
//   POST /sweep, /experiments, /reports (evaluation) -> job id
// Every response carries schema_version. Unknown ids give 404, validation
// failures 400 with a field path, a running experiment 409.
class Service {
 public:
  // Throws kInvalidArgument unless options.root is an existing directory.
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // For tests: bind an ephemeral port, then call listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace latsteer
