// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

// latsteer: command-line entry points for every pipeline stage.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "latsteer/bias_report.hpp"
#include "latsteer/experiment.hpp"
#include "latsteer/serialization.hpp"
#include "latsteer/service.hpp"
#include "latsteer/store.hpp"
#include "latsteer/tensor_io.hpp"

using namespace latsteer;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string default_root() {
  const char* env = std::getenv("LATSTEER_ROOT");
  return env && *env ? env : "latsteer-artifacts";
}

// "0:40:2" (inclusive range) or "0,2,4".
std::vector<double> parse_grid(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  try {
    if (s.find(':') != std::string::npos) {
      std::vector<double> parts;
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
      if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0]) throw std::invalid_argument(s);
      const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
      for (long i = 0; i <= count; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    } else {
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
      }
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument, flag + ": cannot parse '" + s + "'");
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, flag + ": empty");
  return out;
}

CaptureSet parse_steps(const std::string& s) {
  CaptureSet out;
  for (double v : parse_grid(s, "--steps")) {
    if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::kInvalidArgument, "--steps: not a step index");
    out.insert(static_cast<std::uint32_t>(v));
  }
  return out;
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(tensor_io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, path + ": " + e.what());
  }
}

// Builtin name or a JSON file holding a PromptSpec.
PromptSpec load_prompt(const std::string& arg, const std::string& flag) {
  if (arg.starts_with("toy:") || arg.starts_with("text:")) return builtin_prompt(arg);
  if (!std::filesystem::exists(arg)) {
    throw Error(ErrorCode::kInvalidArgument, flag + ": '" + arg + "' is neither a builtin prompt nor a file");
  }
  return codec::prompt_from_json(read_json_file(arg), flag);
}

// "<id>:<omega>".
std::vector<std::pair<std::string, double>> parse_terms(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& a : args) {
    const auto colon = a.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw Error(ErrorCode::kInvalidArgument, "--direction: expected <id>:<omega>, got '" + a + "'");
    }
    try {
      out.emplace_back(a.substr(0, colon), std::stod(a.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "--direction: bad omega in '" + a + "'");
    }
  }
  return out;
}

// Flags shared by the stages that read an ExperimentConfig.
struct ConfigFlags {
  std::string config_file;
  std::string backend;
  std::string p1, p2;
  std::size_t n = 0;
  std::string steps;
  double c = 0;
  std::string omega_grid;
  std::size_t eval_n = 0;
  std::string policy;
  std::string providers;
  std::uint64_t seed_base = 0;
  bool seed_base_set = false;

  void add(CLI::App* app, bool learning) {
    app->add_option("--config", config_file, "Experiment config (JSON)");
    app->add_option("--backend", backend, "toy | external:<endpoint>");
    app->add_option("--p1", p1, "Neutral prompt: toy:neutral, text:<prompt> or a JSON file");
    if (learning) {
      app->add_option("--p2", p2, "Target prompt");
      app->add_option("--n", n, "Samples per prompt");
      app->add_option("--steps", steps, "Capture steps, e.g. 0:30:5 or 10,25");
      app->add_option("--c", c, "SVM regularization C");
    }
    app->add_option("--omega-grid", omega_grid, "e.g. 0:40:2");
    app->add_option("--eval-n", eval_n, "Seeds per sweep cell");
    app->add_option("--policy", policy, "max_rate_gated | min_frechet");
    app->add_option("--providers", providers, "stub | external:<endpoint>");
    app->add_option("--seed-base", seed_base, "Base seed")->each([this](const std::string&) { seed_base_set = true; });
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg = config_file.empty() ? default_toy_experiment()
                                               : ExperimentConfig::from_json(read_json_file(config_file));
    if (!backend.empty()) cfg.backend = backend;
    if (!p1.empty()) cfg.neutral = load_prompt(p1, "--p1");
    if (!p2.empty()) cfg.target = load_prompt(p2, "--p2");
    if (n) cfg.n = n;
    if (!steps.empty()) cfg.capture_steps = parse_steps(steps);
    if (c != 0) cfg.c = c;
    if (!omega_grid.empty()) cfg.omega_grid = parse_grid(omega_grid, "--omega-grid");
    if (eval_n) cfg.eval_n = eval_n;
    if (!policy.empty()) cfg.policy = selection_policy_from_string(policy);
    if (!providers.empty()) cfg.providers = providers;
    if (seed_base_set) cfg.seed_base = seed_base;
    cfg.validate();
    return cfg;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-direction steering for diffusion models"};
  app.require_subcommand(1);
  std::string root = default_root();
  app.add_option("--root", root, "Artifact root (default $LATSTEER_ROOT)");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate samples, optionally steered");
  std::string gen_prompt = "toy:neutral", gen_backend = "toy", gen_capture;
  std::size_t gen_seeds = 4;
  std::uint64_t gen_seed_base = 0;
  std::vector<std::string> gen_terms;
  gen->add_option("--prompt", gen_prompt, "Prompt: builtin name or JSON file");
  gen->add_option("--backend", gen_backend, "toy | external:<endpoint>");
  gen->add_option("--seeds", gen_seeds, "Number of seeds");
  gen->add_option("--seed-base", gen_seed_base, "First seed");
  gen->add_option("--capture", gen_capture, "Snapshot steps to keep");
  gen->add_option("--direction", gen_terms, "<direction id>:<omega>, repeatable");

  // learn-direction
  auto* learn = app.add_subcommand("learn-direction", "Capture latents and fit one direction per step");
  ConfigFlags learn_flags;
  learn_flags.add(learn, true);
  learn->add_option("--out", root, "Artifact root");

  // search-config
  auto* search = app.add_subcommand("search-config", "Sweep (step, omega) and select a configuration");
  ConfigFlags search_flags;
  search_flags.add(search, false);
  std::vector<std::string> search_dirs;
  search->add_option("--direction", search_dirs, "<step>=<direction id>, repeatable")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Baseline vs steered rates and SPD");
  ConfigFlags eval_flags;
  eval_flags.add(eval, false);
  std::vector<std::string> eval_terms;
  std::size_t eval_count = 0;
  eval->add_option("--direction", eval_terms, "<direction id>:<omega>, repeatable")->required();
  eval->add_option("--samples", eval_count, "Generations per arm (default 100)");

  // report
  auto* report = app.add_subcommand("report", "Bias report, or an SPD table of evaluation reports");
  std::string concept_name, attributes_file, images_dir, report_providers = "stub";
  std::size_t report_k = 15;
  bool per_image = false;
  std::vector<std::string> table_ids;
  report->add_option("--concept", concept_name, "Concept to analyse");
  report->add_option("--attributes", attributes_file, "File with one attribute per line");
  report->add_option("--images", images_dir, "Directory of generated images");
  report->add_option("--k", report_k, "Ranking length");
  report->add_option("--providers", report_providers, "stub | external:<endpoint>");
  report->add_flag("--per-image", per_image, "Add per-image vision rankings");
  report->add_option("--table", table_ids, "Evaluation report ids for a Table-1 style summary");

  // run-experiment
  auto* run = app.add_subcommand("run-experiment", "learn -> sweep -> select -> evaluate");
  ConfigFlags run_flags;
  run_flags.add(run, true);

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API over the artifact root");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    ArtifactStore store(root);

    if (*gen) {
      const PromptSpec prompt = load_prompt(gen_prompt, "--prompt");
      auto backend = make_backend(gen_backend, toy::Schedule::log_snr_linear(30), 8);
      std::vector<std::uint64_t> seeds;
      for (std::size_t j = 0; j < gen_seeds; ++j) seeds.push_back(gen_seed_base + j);
      const CaptureSet capture = gen_capture.empty() ? CaptureSet{} : parse_steps(gen_capture);
      const auto terms = parse_terms(gen_terms);
      auto persist = [&](const std::vector<TrajectoryRecord>& runs) {
        json out = json::array();
        for (const auto& r : runs) out.push_back({{"seed", r.seed}, {"trajectory_id", store.save_trajectory(r)}});
        return out;
      };
      json result = {{"prompt_id", prompt.id}};
      result["baseline"] = persist(batch_generate_all(*backend, prompt, seeds, capture));
      if (terms.empty()) {
        result["samples"] = result["baseline"];
      } else {
        const SteeringPlan plan = plan_from_store(store, terms);
        result["samples"] = persist(batch_generate_all(*backend, prompt, seeds, capture, &plan));
      }
      print_json(result);
      return 0;
    }

    if (*learn) {
      const auto cfg = learn_flags.build();
      auto backend = make_experiment_backend(cfg);
      const auto datasets = build_dataset(*backend, cfg.neutral, cfg.target, cfg.n, cfg.capture_steps, cfg.seed_base);
      json out = json::array();
      for (const auto& [step, ds] : datasets) {
        const auto fit = fit_direction(ds, cfg.c, std::time(nullptr));
        out.push_back({{"step", step},
                       {"dataset_id", store.save_dataset(ds)},
                       {"direction_id", store.save_direction(fit.direction)},
                       {"cv_accuracy", fit.fit.cv_accuracy},
                       {"margin", fit.fit.margin}});
      }
      print_json({{"directions", out}});
      return 0;
    }

    if (*search) {
      const auto cfg = search_flags.build();
      std::map<std::uint32_t, std::string> refs;
      std::map<std::uint32_t, Direction> directions;
      for (const auto& arg : search_dirs) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw Error(ErrorCode::kInvalidArgument, "--direction: expected <step>=<id>, got '" + arg + "'");
        }
        std::uint32_t step = 0;
        try {
          step = static_cast<std::uint32_t>(std::stoul(arg.substr(0, eq)));
        } catch (const std::logic_error&) {
          throw Error(ErrorCode::kInvalidArgument, "--direction: bad step in '" + arg + "'");
        }
        refs[step] = arg.substr(eq + 1);
        directions.emplace(step, store.load_direction(refs[step]));
      }
      auto backend = make_experiment_backend(cfg);
      const auto classifier = attach_providers(cfg.classifier, cfg.providers);
      const auto table = run_config_sweep(cfg, *backend, classifier, directions, refs);
      const auto id = store.save_sweep(table);
      std::cout << "step  omega   rate   frechet   valid\n";
      for (const auto& r : table.outcome.results) {
        std::printf("%4u  %5.1f  %5.2f  %8s  %s\n", r.step, r.omega, r.target_rate,
                    r.frechet ? std::to_string(*r.frechet).substr(0, 8).c_str() : "-", r.valid ? "yes" : "no");
      }
      json out = {{"sweep_id", id}};
      out["selected"] = table.selected ? codec::to_json(*table.selected) : json(nullptr);
      print_json(out);
      if (!table.selected) throw Error(ErrorCode::kOutOfDistribution, "all configurations out of distribution");
      return 0;
    }

    if (*eval) {
      auto cfg = eval_flags.build();
      if (eval_count) cfg.evaluate_n = eval_count;
      const SteeringPlan plan = plan_from_store(store, parse_terms(eval_terms));
      auto backend = make_experiment_backend(cfg);
      const auto classifier = attach_providers(cfg.classifier, cfg.providers);
      EvaluateOptions eo;
      eo.seed_base = cfg.evaluate_seed_base;
      eo.requires_human_evaluation = cfg.requires_human_evaluation;
      const auto rep = evaluate(*backend, cfg.neutral, plan, cfg.evaluate_n, classifier, cfg.target_label, eo);
      print_json({{"report_id", store.save_evaluation(rep)}, {"report", codec::to_json(rep)}});
      return 0;
    }

    if (*report) {
      if (!table_ids.empty()) {
        std::vector<EvaluationReport> reports;
        for (const auto& id : table_ids) reports.push_back(store.load_evaluation(id));
        std::cout << format_spd_table(reports);
        return 0;
      }
      if (concept_name.empty() || attributes_file.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "report: give --concept and --attributes, or --table ids");
      }
      BiasReportOptions ro;
      ro.k = report_k;
      ro.per_image = per_image;
      const auto refs = images_dir.empty() ? std::vector<std::string>{} : list_image_refs(images_dir);
      const auto doc = build_report(concept_name, read_attribute_file(attributes_file), refs,
                                    make_providers(report_providers), ro);
      const auto id = store.save_bias_report(doc);
      std::cout << canonical_report_text(doc);
      std::cerr << "report_id " << id << "\n";
      return 0;
    }

    if (*run) {
      const auto cfg = run_flags.build();
      ExperimentLock lock(root, cfg.experiment_id());
      const auto summary = run_experiment(cfg, store);
      persist_summary(root, cfg, summary);
      print_json(summary.to_json());
      std::cerr << spd_row(summary) << "\n";
      return summary.ok ? 0 : kExitRuntime;
    }

    if (*serve) {
      std::filesystem::create_directories(root);
      ServiceOptions so;
      so.root = root;
      Service service(so);
      std::cerr << "serving " << root << " on http://" << host << ":" << port << "\n";
      return service.listen(host, port) ? 0 : kExitRuntime;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
