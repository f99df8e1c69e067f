// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "latsteer/protocol.hpp"

namespace latsteer {

// One request in flight at a time per transport; open several transports
// for concurrency.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual wire::Message exchange(const wire::Message& request,
                                 std::chrono::milliseconds timeout) = 0;
  virtual std::string describe() const = 0;
};

using FrameHandler = std::function<wire::Message(const wire::Message&)>;

// Spawns argv[0] and talks over its stdin/stdout.
std::unique_ptr<Transport> make_exec_transport(std::vector<std::string> argv);

// Connects to a listening AF_UNIX stream socket.
std::unique_ptr<Transport> make_unix_socket_transport(std::string path);

// In-process handler; requests and responses still round-trip through bytes.
std::unique_ptr<Transport> make_loopback_transport(FrameHandler handler);

// "exec:<command> [args...]" (split on spaces) or "unix:<path>".
std::unique_ptr<Transport> transport_from_endpoint(const std::string& endpoint);

// Serves frames read from in_fd until EOF, writing responses to out_fd.
// Handler exceptions become error responses.
void serve_stream(int in_fd, int out_fd, const FrameHandler& handler);

// Accept loop on a unix socket; one connection served at a time.
void serve_unix_socket(const std::string& path, const FrameHandler& handler);

}  // namespace latsteer
