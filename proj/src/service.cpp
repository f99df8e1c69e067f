// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/service.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "latsteer/bias_report.hpp"
#include "latsteer/experiment.hpp"
#include "latsteer/serialization.hpp"
#include "latsteer/store.hpp"

namespace latsteer {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";
constexpr std::size_t kMaxSeedsPerRequest = 1000;

int status_for(const Error& e) {
  if (e.is_validation()) return 400;
  switch (e.code()) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kBusy: return 409;
    default: return 500;
  }
}

// "neutral.mixture.dim: differs from dim" -> "neutral.mixture.dim".
std::string field_of(const std::string& detail) {
  const auto colon = detail.find(": ");
  if (colon == std::string::npos || colon == 0) return {};
  const auto head = detail.substr(0, colon);
  return head.find(' ') == std::string::npos ? head : std::string{};
}

json error_body(const std::string& code, const std::string& message, const std::string& field) {
  json e = {{"code", code}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  return {{"schema_version", kSchemaVersion}, {"error", e}};
}

void send(httplib::Response& res, int status, json body) {
  body["schema_version"] = kSchemaVersion;
  res.status = status;
  res.set_content(body.dump(), kJson);
}

json parse_body(const httplib::Request& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "body: expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("body: ") + e.what());
  }
}

std::vector<std::pair<std::string, double>> terms_from_json(const json& body) {
  std::vector<std::pair<std::string, double>> out;
  if (!body.contains("terms")) return out;
  const auto& terms = body.at("terms");
  if (!terms.is_array()) throw Error(ErrorCode::kInvalidArgument, "terms: expected an array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto path = "terms[" + std::to_string(i) + "]";
    out.emplace_back(codec::get_string(terms[i], "direction_id", path),
                     codec::get_double(terms[i], "omega", path));
  }
  return out;
}

PromptSpec prompt_from_body(const json& body) {
  const auto& p = codec::field(body, "prompt", "");
  if (p.is_string()) return builtin_prompt(p.get<std::string>());
  return codec::prompt_from_json(p, "prompt");
}

ExperimentConfig config_from_body(const json& body) {
  const auto& c = codec::field(body, "config", "");
  try {
    auto config = ExperimentConfig::from_json(c);
    config.validate();
    return config;
  } catch (const Error& e) {
    if (!e.is_validation()) throw;
    const auto f = field_of(e.detail());
    throw Error(e.code(), f.empty() ? "config: " + e.detail() : "config." + e.detail());
  }
}

std::map<std::uint32_t, std::string> direction_ids_from_body(const json& body) {
  const auto& ids = codec::field(body, "direction_ids", "");
  if (!ids.is_object() || ids.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "direction_ids: expected a non-empty {step: id} object");
  }
  std::map<std::uint32_t, std::string> out;
  for (const auto& [step, id] : ids.items()) {
    const auto path = "direction_ids." + step;
    if (step.empty() || step.find_first_not_of("0123456789") != std::string::npos || step.size() > 9) {
      throw Error(ErrorCode::kInvalidArgument, path + ": key must be a step index");
    }
    if (!id.is_string()) throw Error(ErrorCode::kInvalidArgument, path + ": expected a direction id");
    out[static_cast<std::uint32_t>(std::stoul(step))] = id.get<std::string>();
  }
  return out;
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  ArtifactStore store;
  httplib::Server server;

  struct Job {
    std::string kind;
    std::string status = "running";
    json result;
    std::string error;
    std::string experiment_id;
  };
  std::mutex mu;
  std::map<std::string, Job> jobs;
  std::set<std::string> running_experiments;
  std::vector<std::thread> workers;
  std::atomic<std::uint64_t> next_job{1};

  explicit Impl(ServiceOptions o) : options(std::move(o)), store(options.root) { routes(); }

  ~Impl() {
    server.stop();
    for (auto& t : workers) {
      if (t.joinable()) t.join();
    }
  }

  template <typename F>
  void handle(const httplib::Request& req, httplib::Response& res, F&& f) {
    (void)req;
    try {
      f();
    } catch (const Error& e) {
      res.status = status_for(e);
      res.set_content(error_body(code_id(e.code()), e.detail(), e.is_validation() ? field_of(e.detail()) : "").dump(),
                      kJson);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_body("internal", e.what(), "").dump(), kJson);
    }
  }

  // Runs `work` on a worker thread; the job record holds its JSON result.
  std::string start_job(const std::string& kind, std::function<json()> work, std::string experiment_id = {}) {
    const std::string id = "job-" + std::to_string(next_job++);
    {
      std::lock_guard lock(mu);
      if (!experiment_id.empty() && !running_experiments.insert(experiment_id).second) {
        throw Error(ErrorCode::kBusy, "experiment " + experiment_id + " is already running");
      }
      jobs[id] = Job{kind, "running", nullptr, {}, experiment_id};
      workers.emplace_back([this, id, work = std::move(work)] {
        json result;
        std::string error;
        try {
          result = work();
        } catch (const std::exception& e) {
          error = e.what();
        }
        std::lock_guard lock(mu);
        auto& job = jobs[id];
        job.status = error.empty() ? "done" : "failed";
        job.result = std::move(result);
        job.error = std::move(error);
        if (!job.experiment_id.empty()) running_experiments.erase(job.experiment_id);
      });
    }
    return id;
  }

  void routes() {
    server.Get("/directions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        json list = json::array();
        for (const auto& m : store.list(ArtifactKind::kDirection)) {
          json e = m.metadata;
          e["id"] = m.id;
          list.push_back(e);
        }
        send(res, 200, {{"directions", list}});
      });
    });

    server.Get(R"(/directions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const std::string id = req.matches[1];
        const Direction d = store.load_direction(id);
        const auto values = d.vector.values();
        json dir = {{"vector", std::vector<float>(values.begin(), values.end())},
                    {"latent_shape", d.vector.shape()},
                    {"bias", d.bias},
                    {"raw_norm", d.raw_norm},
                    {"train_step", d.train_step},
                    {"neutral_id", d.neutral_id},
                    {"target_id", d.target_id},
                    {"n_per_class", d.n_per_class},
                    {"cv_accuracy", d.cv_accuracy},
                    {"backend_id", d.backend_id},
                    {"created_at", d.created_at}};
        send(res, 200, {{"id", id}, {"direction", dir}});
      });
    });

    server.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { send(res, 200, generate(parse_body(req))); });
    });

    server.Get("/sweeps", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { send(res, 200, {{"sweeps", listing(ArtifactKind::kSweep)}}); });
    });

    server.Get(R"(/sweeps/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const std::string id = req.matches[1];
        const auto a = store.load(ArtifactKind::kSweep, id);
        // Decode to check the payload before serving it.
        sweep_from_artifact(a);
        send(res, 200, {{"id", id}, {"sweep", json::parse(a.payload("sweep.json"))}});
      });
    });

    server.Post("/sweep", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const json body = parse_body(req);
        const auto config = config_from_body(body);
        const auto refs = direction_ids_from_body(body);
        std::map<std::uint32_t, Direction> directions;
        for (const auto& [step, id] : refs) directions.emplace(step, store.load_direction(id));
        const auto job = start_job("sweep", [this, config, refs, directions] {
          auto backend = make_experiment_backend(config);
          const auto classifier = attach_providers(config.classifier, config.providers);
          const auto table = run_config_sweep(config, *backend, classifier, directions, refs);
          json r = {{"sweep_id", store.save_sweep(table)}};
          r["selected"] = table.selected ? codec::to_json(*table.selected) : json(nullptr);
          return r;
        });
        send(res, 202, {{"job_id", job}});
      });
    });

    server.Get("/reports", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { send(res, 200, {{"reports", listing(ArtifactKind::kReport)}}); });
    });

    server.Get(R"(/reports/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const std::string id = req.matches[1];
        json body = {{"id", id}};
        if (store.report_type(id) == ReportType::kEvaluation) {
          body["report_type"] = "evaluation";
          body["report"] = codec::to_json(store.load_evaluation(id));
        } else {
          body["report_type"] = "bias";
          body["report"] = report_to_json(store.load_bias_report(id));
        }
        send(res, 200, body);
      });
    });

    server.Post("/reports", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { post_report(parse_body(req), res); });
    });

    server.Post("/experiments", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const auto config = config_from_body(parse_body(req));
        const auto experiment_id = config.experiment_id();
        const auto job = start_job(
            "experiment",
            [this, config, experiment_id] {
              ExperimentLock lock(options.root, experiment_id);
              const auto summary = run_experiment(config, store);
              persist_summary(options.root, config, summary);
              return summary.to_json();
            },
            experiment_id);
        send(res, 202, {{"job_id", job}, {"experiment_id", experiment_id}});
      });
    });

    server.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const std::string id = req.matches[1];
        std::lock_guard lock(mu);
        auto it = jobs.find(id);
        if (it == jobs.end()) throw Error(ErrorCode::kNotFound, "job '" + id + "' not found");
        json body = {{"id", id}, {"kind", it->second.kind}, {"status", it->second.status}};
        if (it->second.status == "done") body["result"] = it->second.result;
        if (it->second.status == "failed") body["error"] = it->second.error;
        send(res, 200, body);
      });
    });
  }

  json listing(ArtifactKind kind) const {
    json list = json::array();
    for (const auto& m : store.list(kind)) {
      json e = m.metadata;
      e["id"] = m.id;
      list.push_back(e);
    }
    return list;
  }

  json generate(const json& body) {
    const PromptSpec prompt = prompt_from_body(body);
    std::vector<std::uint64_t> seeds;
    if (body.contains("seeds")) {
      const auto& s = body.at("seeds");
      if (!s.is_array() || s.empty()) throw Error(ErrorCode::kInvalidArgument, "seeds: expected a non-empty array");
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i].is_number_unsigned()) {
          throw Error(ErrorCode::kInvalidArgument, "seeds[" + std::to_string(i) + "]: expected a seed");
        }
        seeds.push_back(s[i].get<std::uint64_t>());
      }
    } else {
      const auto count = codec::get_u64(body, "seed_count", "");
      const auto base = body.contains("seed_base") ? codec::get_u64(body, "seed_base", "") : 0;
      if (count == 0) throw Error(ErrorCode::kInvalidArgument, "seed_count: must be >= 1");
      if (count > kMaxSeedsPerRequest) throw Error(ErrorCode::kInvalidArgument, "seed_count: at most 1000");
      for (std::uint64_t j = 0; j < count; ++j) seeds.push_back(base + j);
    }
    if (seeds.size() > kMaxSeedsPerRequest) throw Error(ErrorCode::kInvalidArgument, "seeds: at most 1000");
    CaptureSet capture;
    if (body.contains("capture_steps")) {
      const auto& c = body.at("capture_steps");
      if (!c.is_array()) throw Error(ErrorCode::kInvalidArgument, "capture_steps: expected an array");
      for (const auto& s : c) {
        if (!s.is_number_unsigned()) throw Error(ErrorCode::kInvalidArgument, "capture_steps: expected step indices");
        capture.insert(s.get<std::uint32_t>());
      }
    }
    const auto terms = terms_from_json(body);
    auto backend = make_backend(options.backend, options.schedule, options.dim);

    auto persist = [&](const std::vector<TrajectoryRecord>& runs) {
      json out = json::array();
      for (const auto& r : runs) out.push_back({{"seed", r.seed}, {"trajectory_id", store.save_trajectory(r)}});
      return out;
    };
    json result;
    result["prompt_id"] = prompt.id;
    result["baseline"] = persist(batch_generate_all(*backend, prompt, seeds, capture));
    if (terms.empty()) {
      result["samples"] = result["baseline"];
    } else {
      const SteeringPlan plan = plan_from_store(store, terms);
      result["samples"] = persist(batch_generate_all(*backend, prompt, seeds, capture, &plan));
    }
    return result;
  }

  void post_report(const json& body, httplib::Response& res) {
    const auto type = codec::get_string(body, "type", "");
    if (type == "bias") {
      const auto concept_name = codec::get_string(body, "concept", "");
      const auto& attrs = codec::field(body, "attributes", "");
      if (!attrs.is_array() || attrs.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "attributes: expected a non-empty array");
      }
      std::vector<std::string> vocab;
      for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (!attrs[i].is_string()) {
          throw Error(ErrorCode::kInvalidArgument, "attributes[" + std::to_string(i) + "]: expected a string");
        }
        vocab.push_back(attrs[i].get<std::string>());
      }
      std::vector<std::string> refs;
      if (body.contains("images")) {
        refs = list_image_refs(codec::get_string(body, "images", ""));
      } else if (body.contains("image_refs")) {
        refs = codec::field(body, "image_refs", "").get<std::vector<std::string>>();
      }
      BiasReportOptions ro;
      if (body.contains("k")) ro.k = codec::get_u64(body, "k", "");
      if (ro.k == 0) throw Error(ErrorCode::kInvalidArgument, "k: must be >= 1");
      if (body.contains("per_image")) ro.per_image = codec::get_bool(body, "per_image", "");
      const auto providers =
          make_providers(body.contains("providers") ? codec::get_string(body, "providers", "") : options.providers);
      const auto doc = build_report(concept_name, vocab, refs, providers, ro);
      send(res, 201, {{"id", store.save_bias_report(doc)}, {"report_type", "bias"}});
      return;
    }
    if (type != "evaluation") throw Error(ErrorCode::kInvalidArgument, "type: expected bias or evaluation");
    const auto config = config_from_body(body);
    const auto terms = terms_from_json(body);
    if (terms.empty()) throw Error(ErrorCode::kInvalidArgument, "terms: need at least one term");
    const SteeringPlan plan = plan_from_store(store, terms);
    const auto job = start_job("evaluation", [this, config, plan] {
      auto backend = make_experiment_backend(config);
      const auto classifier = attach_providers(config.classifier, config.providers);
      EvaluateOptions eo;
      eo.seed_base = config.evaluate_seed_base;
      eo.requires_human_evaluation = config.requires_human_evaluation;
      const auto report =
          evaluate(*backend, config.neutral, plan, config.evaluate_n, classifier, config.target_label, eo);
      return json{{"report_id", store.save_evaluation(report)}, {"spd", report.spd}};
    });
    send(res, 202, {{"job_id", job}});
  }
};

Service::Service(ServiceOptions options) {
  if (!std::filesystem::is_directory(options.root)) {
    throw Error(ErrorCode::kInvalidArgument, "artifact root " + options.root.string() + " is not a directory");
  }
  impl_ = std::make_unique<Impl>(std::move(options));
}

Service::~Service() = default;

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() { impl_->server.stop(); }

}  // namespace latsteer
