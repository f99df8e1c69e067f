// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "latsteer/service.hpp"

namespace latsteer::testing {

// A service on an ephemeral localhost port, stopped on destruction.
class RunningService {
 public:
  explicit RunningService(const std::filesystem::path& root) {
    ServiceOptions o;
    o.root = root;
    service_ = std::make_unique<Service>(o);
    port_ = service_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { service_->listen_after_bind(); });
    service_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(120, 0);
  }

  ~RunningService() {
    service_->stop();
    thread_.join();
  }

  struct Reply {
    int status = 0;
    nlohmann::json body;
  };

  Reply get(const std::string& path) { return wrap(client_->Get(path)); }

  Reply post(const std::string& path, const nlohmann::json& body) {
    return wrap(client_->Post(path, body.dump(), "application/json"));
  }

  Reply post_raw(const std::string& path, const std::string& body) {
    return wrap(client_->Post(path, body, "application/json"));
  }

  // Polls /jobs/{id} until it leaves "running".
  Reply wait_job(const std::string& id, std::chrono::seconds limit = std::chrono::seconds(300)) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (true) {
      auto r = get("/jobs/" + id);
      if (r.status != 200 || r.body.value("status", "") != "running") return r;
      if (std::chrono::steady_clock::now() > deadline) return r;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  int port() const { return port_; }

 private:
  static Reply wrap(const httplib::Result& res) {
    Reply r;
    if (!res) return r;
    r.status = res->status;
    r.body = nlohmann::json::parse(res->body, nullptr, false);
    return r;
  }

  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace latsteer::testing
