// Copyright 2026 The latsteer Authors.
// SPDX-License-Identifier: Apache-2.0

#include "latsteer/experiment.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "latsteer/serialization.hpp"
#include "latsteer/tensor_io.hpp"

namespace latsteer {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, field + ": " + what);
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) invalid(field, what);
}

}  // namespace

void ExperimentConfig::validate() const {
  check(backend == "toy" || backend.starts_with("external:"), "backend",
        "expected toy or external:<endpoint>");
  const bool toy = backend == "toy";
  if (toy) {
    try {
      schedule.validate();
    } catch (const Error& e) {
      invalid("schedule", e.what());
    }
    check(dim >= 1, "dim", "must be >= 1");
  }
  const std::pair<const PromptSpec*, const char*> prompts[] = {{&neutral, "neutral"}, {&target, "target"}};
  for (const auto& [p, name] : prompts) {
    try {
      p->validate();
    } catch (const Error& e) {
      invalid(name, e.what());
    }
    if (toy) {
      check(p->mixture.has_value(), std::string(name) + ".mixture", "toy backend needs a mixture");
      check(p->mixture->dim == dim, std::string(name) + ".mixture.dim", "differs from dim");
    } else {
      check(!p->text.empty(), std::string(name) + ".text", "external backends need prompt text");
    }
  }
  check(neutral.id != target.id, "target.id", "must differ from neutral.id");
  check(n >= 2, "n", "must be >= 2");
  check(!capture_steps.empty(), "capture_steps", "must be non-empty");
  if (toy) {
    check(*capture_steps.rbegin() <= schedule.k, "capture_steps",
          "step " + std::to_string(*capture_steps.rbegin()) + " exceeds k = " + std::to_string(schedule.k));
  }
  check(c > 0.0 && std::isfinite(c), "c", "must be positive");
  check(!omega_grid.empty(), "omega_grid", "must be non-empty");
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    check(std::isfinite(omega_grid[i]), "omega_grid[" + std::to_string(i) + "]", "not finite");
  }
  check(eval_n >= kMinEvalSeeds, "eval_n", "must be >= " + std::to_string(kMinEvalSeeds));
  check(reference_n == 0 || reference_n >= 2, "reference_n", "must be 0 or >= 2");
  check(gate_factor > 0.0 && std::isfinite(gate_factor), "gate_factor", "must be positive");
  check(evaluate_n >= 1, "evaluate_n", "must be >= 1");
  check(!classifier.classes.empty(), "classifier", "missing");
  check(classifier.classes.size() >= 2, "classifier.classes", "need >= 2 classes");
  for (std::size_t i = 0; i < classifier.classes.size(); ++i) {
    const auto& cs = classifier.classes[i];
    const auto field = "classifier.classes[" + std::to_string(i) + "]";
    check(!cs.label.empty(), field + ".label", "empty");
    if (classifier.kind == ClassifierKind::kBayesOracle) {
      check(cs.mixture.has_value(), field + ".mixture", "bayes_oracle classes need a mixture");
      if (toy) check(cs.mixture->dim == dim, field + ".mixture.dim", "differs from dim");
    } else {
      check(!cs.prompt.empty(), field + ".prompt", "zero-shot classes need a prompt");
    }
    for (std::size_t j = 0; j < i; ++j) {
      check(classifier.classes[j].label != cs.label, field + ".label", "duplicate label '" + cs.label + "'");
    }
  }
  if (classifier.kind == ClassifierKind::kBayesOracle) {
    check(toy, "classifier.kind", "bayes_oracle needs the toy backend");
  }
  bool found = false;
  for (const auto& cs : classifier.classes) found = found || cs.label == target_label;
  check(found, "target_label", "'" + target_label + "' is not a classifier label");
}

json ExperimentConfig::to_json() const {
  return {{"backend", backend},
          {"schedule", codec::to_json(schedule)},
          {"dim", dim},
          {"providers", providers},
          {"neutral", codec::to_json(neutral)},
          {"target", codec::to_json(target)},
          {"n", n},
          {"capture_steps", capture_steps},
          {"c", c},
          {"seed_base", seed_base},
          {"omega_grid", omega_grid},
          {"eval_n", eval_n},
          {"sweep_seed_base", sweep_seed_base},
          {"reference_n", reference_n},
          {"reference_seed_base", reference_seed_base},
          {"gate_factor", gate_factor},
          {"policy", to_string(policy)},
          {"classifier", codec::to_json(classifier)},
          {"target_label", target_label},
          {"evaluate_n", evaluate_n},
          {"evaluate_seed_base", evaluate_seed_base},
          {"requires_human_evaluation", requires_human_evaluation}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) invalid("config", "expected an object");
  // Omitted fields keep the defaults of default_toy_experiment().
  ExperimentConfig c = default_toy_experiment();
  const std::string root;
  if (j.contains("backend")) c.backend = codec::get_string(j, "backend", root);
  if (j.contains("schedule")) c.schedule = codec::schedule_from_json(j.at("schedule"), "schedule");
  if (j.contains("dim")) c.dim = codec::get_u64(j, "dim", root);
  if (j.contains("providers")) c.providers = codec::get_string(j, "providers", root);
  if (j.contains("neutral")) c.neutral = codec::prompt_from_json(j.at("neutral"), "neutral");
  if (j.contains("target")) c.target = codec::prompt_from_json(j.at("target"), "target");
  if (j.contains("n")) c.n = codec::get_u64(j, "n", root);
  if (j.contains("capture_steps")) {
    const auto& steps = j.at("capture_steps");
    if (!steps.is_array()) invalid("capture_steps", "expected an array");
    c.capture_steps.clear();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (!steps[i].is_number_unsigned()) invalid("capture_steps[" + std::to_string(i) + "]", "expected a step index");
      c.capture_steps.insert(steps[i].get<std::uint32_t>());
    }
  }
  if (j.contains("c")) c.c = codec::get_double(j, "c", root);
  if (j.contains("seed_base")) c.seed_base = codec::get_u64(j, "seed_base", root);
  if (j.contains("omega_grid")) c.omega_grid = codec::get_doubles(j, "omega_grid", root);
  if (j.contains("eval_n")) c.eval_n = codec::get_u64(j, "eval_n", root);
  if (j.contains("sweep_seed_base")) c.sweep_seed_base = codec::get_u64(j, "sweep_seed_base", root);
  if (j.contains("reference_n")) c.reference_n = codec::get_u64(j, "reference_n", root);
  if (j.contains("reference_seed_base")) c.reference_seed_base = codec::get_u64(j, "reference_seed_base", root);
  if (j.contains("gate_factor")) c.gate_factor = codec::get_double(j, "gate_factor", root);
  if (j.contains("policy")) {
    try {
      c.policy = selection_policy_from_string(codec::get_string(j, "policy", root));
    } catch (const Error& e) {
      invalid("policy", e.what());
    }
  }
  if (j.contains("classifier")) c.classifier = codec::classifier_from_json(j.at("classifier"), "classifier");
  if (j.contains("target_label")) c.target_label = codec::get_string(j, "target_label", root);
  if (j.contains("evaluate_n")) c.evaluate_n = codec::get_u64(j, "evaluate_n", root);
  if (j.contains("evaluate_seed_base")) c.evaluate_seed_base = codec::get_u64(j, "evaluate_seed_base", root);
  if (j.contains("requires_human_evaluation")) {
    c.requires_human_evaluation = codec::get_bool(j, "requires_human_evaluation", root);
  }
  static const std::set<std::string> known = {
      "backend", "schedule", "dim", "providers", "neutral", "target", "n", "capture_steps", "c",
      "seed_base", "omega_grid", "eval_n", "sweep_seed_base", "reference_n", "reference_seed_base",
      "gate_factor", "policy", "classifier", "target_label", "evaluate_n", "evaluate_seed_base",
      "requires_human_evaluation"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) invalid(key, "unknown field");
  }
  return c;
}

std::string ExperimentConfig::experiment_id() const {
  return tensor_io::sha256_hex(to_json().dump()).substr(0, 16);
}

ExperimentConfig default_toy_experiment() {
  constexpr std::size_t dim = 8;
  const double a = 3.0 / std::sqrt(static_cast<double>(dim));
  const std::vector<double> lo(dim, -a), hi(dim, a);

  ExperimentConfig c;
  c.dim = dim;
  c.schedule = toy::Schedule::log_snr_linear(30);
  c.neutral.id = "toy:neutral";
  c.neutral.role = PromptRole::kNeutral;
  c.neutral.mixture = isotropic_mixture({0.95, 0.05}, {lo, hi});
  c.target.id = "toy:target";
  c.target.role = PromptRole::kTarget;
  c.target.mixture = isotropic_mixture({1.0}, {hi});
  for (std::uint32_t s = 0; s <= 30; s += 5) c.capture_steps.insert(s);
  c.classifier.kind = ClassifierKind::kBayesOracle;
  c.classifier.classes = {{"majority", isotropic_mixture({1.0}, {lo}), "A picture of the majority group"},
                          {"minority", isotropic_mixture({1.0}, {hi}), "A picture of the minority group"}};
  c.target_label = "minority";
  c.eval_n = 100;
  return c;
}

json ExperimentSummary::to_json() const {
  json j = {{"experiment_id", experiment_id},
            {"ok", ok},
            {"completed_stages", completed_stages},
            {"sweep_id", sweep_id},
            {"report_id", report_id}};
  if (!ok) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  json ds = json::object(), dirs = json::object();
  for (const auto& [s, id] : dataset_ids) ds[std::to_string(s)] = id;
  for (const auto& [s, id] : direction_ids) dirs[std::to_string(s)] = id;
  j["dataset_ids"] = ds;
  j["direction_ids"] = dirs;
  json sep = json::array();
  for (const auto& [s, acc] : separability) sep.push_back({{"step", s}, {"cv_accuracy", acc}});
  j["separability"] = sep;
  j["selected"] = selected ? codec::to_json(*selected) : json(nullptr);
  j["report"] = report ? codec::to_json(*report) : json(nullptr);
  return j;
}

ExperimentSummary ExperimentSummary::from_json(const json& j) {
  ExperimentSummary s;
  s.experiment_id = j.at("experiment_id").get<std::string>();
  s.ok = j.at("ok").get<bool>();
  s.completed_stages = j.at("completed_stages").get<std::vector<std::string>>();
  s.failed_stage = j.value("failed_stage", std::string{});
  s.error = j.value("error", std::string{});
  s.sweep_id = j.at("sweep_id").get<std::string>();
  s.report_id = j.at("report_id").get<std::string>();
  for (const auto& [k, v] : j.at("dataset_ids").items()) s.dataset_ids[std::stoul(k)] = v.get<std::string>();
  for (const auto& [k, v] : j.at("direction_ids").items()) s.direction_ids[std::stoul(k)] = v.get<std::string>();
  for (const auto& e : j.at("separability")) {
    s.separability.emplace_back(e.at("step").get<std::uint32_t>(), e.at("cv_accuracy").get<double>());
  }
  if (!j.at("selected").is_null()) s.selected = codec::sweep_result_from_json(j.at("selected"));
  if (!j.at("report").is_null()) s.report = codec::evaluation_from_json(j.at("report"));
  return s;
}

std::string spd_row(const ExperimentSummary& summary) {
  std::ostringstream os;
  os << summary.experiment_id;
  if (!summary.report || !summary.selected) {
    os << "  (incomplete: " << (summary.failed_stage.empty() ? "no report" : summary.failed_stage) << ")";
    return os.str();
  }
  const auto& r = *summary.report;
  os << std::fixed << std::setprecision(2) << "  prompt=" << r.prompt_id << "  step=" << summary.selected->step
     << "  omega=" << summary.selected->omega << "  " << r.target_label
     << ": baseline=" << r.baseline_rates.at(r.target_label) << " steered=" << r.per_label_rate.at(r.target_label)
     << "  SPD=" << r.spd;
  return os.str();
}

PromptSpec builtin_prompt(const std::string& name) {
  if (name == "toy:neutral") return default_toy_experiment().neutral;
  if (name == "toy:target") return default_toy_experiment().target;
  if (name.starts_with("text:") && name.size() > 5) {
    PromptSpec p;
    p.id = name;
    p.text = name.substr(5);
    return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "prompt: unknown builtin '" + name + "'");
}

SteeringPlan plan_from_store(const ArtifactStore& store,
                             const std::vector<std::pair<std::string, double>>& terms) {
  std::vector<SteeringTerm> out;
  for (const auto& [id, omega] : terms) {
    if (!std::isfinite(omega)) throw Error(ErrorCode::kInvalidArgument, "omega: not finite");
    out.push_back({std::make_shared<const Direction>(store.load_direction(id)), omega, id});
  }
  return SteeringPlan(std::move(out));
}

std::unique_ptr<Backend> make_experiment_backend(const ExperimentConfig& config) {
  return make_backend(config.backend, config.schedule, config.dim);
}

AttributeClassifier attach_providers(AttributeClassifier classifier, const std::string& providers) {
  if (classifier.kind == ClassifierKind::kEmbeddingZeroShot && (!classifier.text || !classifier.vision)) {
    auto set = make_providers(providers);
    classifier.text = set.text;
    classifier.vision = set.vision;
  }
  return classifier;
}

SweepTable run_config_sweep(const ExperimentConfig& config, Backend& backend,
                            const AttributeClassifier& classifier,
                            const std::map<std::uint32_t, Direction>& directions,
                            const std::map<std::uint32_t, std::string>& direction_refs) {
  SweepConfig sc;
  sc.omega_grid = config.omega_grid;
  for (std::size_t j = 0; j < config.eval_n; ++j) sc.eval_seeds.push_back(config.sweep_seed_base + j);
  sc.target_label = config.target_label;
  sc.gate_factor = config.gate_factor;
  std::shared_ptr<ImageEmbedder> features;
  if (backend.descriptor().kind == BackendKind::kExternal) {
    features = make_providers(config.providers).vision;
    sc.feature_embedder = features.get();
  }
  if (config.reference_n > 0) {
    std::vector<std::uint64_t> ref_seeds;
    for (std::size_t j = 0; j < config.reference_n; ++j) ref_seeds.push_back(config.reference_seed_base + j);
    const auto refs = batch_generate_all(backend, config.target, ref_seeds, {});
    sc.reference = GaussianStats::from_samples(sample_features(refs, sc.feature_embedder));
  }
  std::vector<std::uint32_t> steps;
  for (const auto& [step, d] : directions) steps.push_back(step);
  SweepTable table;
  table.prompt_id = config.neutral.id;
  table.target_label = config.target_label;
  table.direction_refs = direction_refs;
  table.outcome = sweep(backend, config.neutral, directions, steps, classifier, sc);
  table.policy = config.policy;
  try {
    table.selected = select_config(table.outcome.results, config.policy);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kOutOfDistribution) throw;
  }
  return table;
}

std::filesystem::path experiment_dir(const std::filesystem::path& root, const std::string& experiment_id) {
  return root / "experiments" / experiment_id;
}

void persist_summary(const std::filesystem::path& root, const ExperimentConfig& config,
                     const ExperimentSummary& summary) {
  const auto dir = experiment_dir(root, summary.experiment_id);
  std::filesystem::create_directories(dir);
  tensor_io::write_file_atomic(dir / "config.json", config.to_json().dump(2) + "\n");
  tensor_io::write_file_atomic(dir / "summary.json", summary.to_json().dump(2) + "\n");
}

ExperimentLock::ExperimentLock(const std::filesystem::path& root, const std::string& experiment_id) {
  const auto dir = experiment_dir(root, experiment_id);
  std::filesystem::create_directories(dir);
  const auto path = (dir / "lock").string();
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::kIo, "cannot open " + path);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kBusy, "experiment " + experiment_id + " is already running");
  }
}

ExperimentLock::~ExperimentLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

ExperimentSummary run_experiment(const ExperimentConfig& config, ArtifactStore& store, std::int64_t created_at) {
  config.validate();
  ExperimentSummary summary;
  summary.experiment_id = config.experiment_id();
  std::string stage = "connect";
  try {
    auto backend = make_experiment_backend(config);
    const auto& desc = backend->descriptor();
    if (*config.capture_steps.rbegin() > desc.k) {
      throw Error(ErrorCode::kInvalidArgument, "capture_steps: step exceeds backend k = " + std::to_string(desc.k));
    }
    const AttributeClassifier classifier = attach_providers(config.classifier, config.providers);
    classifier.validate();
    summary.completed_stages.push_back(stage);

    stage = "dataset";
    const auto datasets =
        build_dataset(*backend, config.neutral, config.target, config.n, config.capture_steps, config.seed_base);
    for (const auto& [step, ds] : datasets) summary.dataset_ids[step] = store.save_dataset(ds);
    summary.completed_stages.push_back(stage);

    stage = "fit";
    std::map<std::uint32_t, Direction> directions;
    for (const auto& [step, ds] : datasets) {
      auto fit = fit_direction(ds, config.c, created_at);
      summary.direction_ids[step] = store.save_direction(fit.direction);
      summary.separability.emplace_back(step, fit.direction.cv_accuracy);
      directions.emplace(step, std::move(fit.direction));
    }
    summary.completed_stages.push_back(stage);

    stage = "sweep";
    const SweepTable table = run_config_sweep(config, *backend, classifier, directions, summary.direction_ids);
    summary.sweep_id = store.save_sweep(table);
    if (!table.selected) {
      throw Error(ErrorCode::kOutOfDistribution, "all configurations out of distribution");
    }
    summary.selected = table.selected;
    summary.completed_stages.push_back(stage);

    stage = "evaluate";
    const auto step = table.selected->step;
    const SteeringPlan plan =
        SteeringPlan::single(directions.at(step), table.selected->omega, summary.direction_ids.at(step));
    EvaluateOptions eo;
    eo.seed_base = config.evaluate_seed_base;
    eo.requires_human_evaluation = config.requires_human_evaluation;
    summary.report = evaluate(*backend, config.neutral, plan, config.evaluate_n, classifier, config.target_label, eo);
    summary.report_id = store.save_evaluation(*summary.report);
    summary.completed_stages.push_back(stage);
    summary.ok = true;
  } catch (const std::exception& e) {
    summary.ok = false;
    summary.failed_stage = stage;
    summary.error = e.what();
  }
  return summary;
}

}  // namespace latsteer
