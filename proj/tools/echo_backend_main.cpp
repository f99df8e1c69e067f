// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

// Test double speaking the external backend protocol over stdio or a unix
// socket. Generations echo the steered initial latent.
#include <unistd.h>

#include <iostream>

#include "CLI11.hpp"
#include "latsteer/stub_service.hpp"
#include "latsteer/transport.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Echo backend for the latsteer wire protocol"};
  std::string unix_path;
  std::uint32_t dim = 8, k = 1;
  bool no_hook = false;
  app.add_option("--unix", unix_path, "Listen on a unix socket instead of stdio");
  app.add_option("--dim", dim, "Latent size");
  app.add_option("--k", k, "Reported step count");
  app.add_flag("--no-embedding-hook", no_hook, "Do not advertise embedding_offset_hook");
  CLI11_PARSE(app, argc, argv);

  latsteer::stub::EchoConfig config;
  config.latent_shape = {dim};
  config.k = k;
  config.embedding_offset_hook = !no_hook;
  auto handler = [&](const latsteer::wire::Message& req) { return latsteer::stub::handle(req, config); };
  try {
    if (unix_path.empty()) {
      latsteer::serve_stream(STDIN_FILENO, STDOUT_FILENO, handler);
    } else {
      latsteer::serve_unix_socket(unix_path, handler);
    }
  } catch (const std::exception& e) {
    std::cerr << "echo backend: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
