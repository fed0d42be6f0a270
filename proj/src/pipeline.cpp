#include "oracle_forge/pipeline.hpp"

#include <chrono>

namespace oracle_forge {

namespace {

constexpr std::pair<Mode, std::string_view> kModeNames[] = {
    {Mode::direct, "direct"},
    {Mode::planning_only, "planning_only"},
    {Mode::refinement_only, "refinement_only"},
    {Mode::full, "full"},
};

}  // namespace

std::string_view to_string(Mode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

Mode mode_from_string(std::string_view name) {
  for (const auto& [m, n] : kModeNames) {
    if (n == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "' (direct, planning_only, refinement_only, full)");
}

bool uses_deliberation(Mode mode) { return mode == Mode::planning_only || mode == Mode::full; }
bool uses_validation(Mode mode) { return mode == Mode::refinement_only || mode == Mode::full; }

std::vector<std::string> RunConfig::check() const {
  std::vector<std::string> warnings;
  if (suite_path.empty()) throw ConfigError("--tasks is required");
  if (provider == "scripted") {
    if (!script_path) throw ConfigError("the scripted provider needs --script");
  } else if (provider != "openai") {
    throw ConfigError("unknown provider '" + provider + "' (scripted, openai)");
  }
  if (max_refine < 0 || max_refine > kMaxRefinementIterations) {
    throw ConfigError("--max-refine must lie in 0.." + std::to_string(kMaxRefinementIterations));
  }
  if (!(temperature >= 0.0 && temperature <= 1.0)) throw ConfigError("temperature must lie in [0, 1]");
  if (max_output_tokens <= 0) throw ConfigError("max output tokens must be positive");
  if (workers == 0) throw ConfigError("--workers must be positive");
  limits.check();
  if (uses_validation(mode) && runner_command.empty()) {
    throw ConfigError("mode " + std::string(to_string(mode)) + " needs a sandbox runner (--runner)");
  }
  if (!uses_validation(mode) && max_refine_explicit && max_refine > 0) {
    warnings.push_back("mode " + std::string(to_string(mode)) + " skips refinement; --max-refine " +
                       std::to_string(max_refine) + " is ignored");
  }
  return warnings;
}

ModelSettings RunConfig::model_settings() const {
  ModelSettings m;
  m.provider_id = provider;
  m.model_id = model;
  m.temperature = temperature;
  m.max_output_tokens = max_output_tokens;
  return m;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"suite_path", c.suite_path},
                     {"mode", to_string(c.mode)},
                     {"provider", c.provider},
                     {"model", c.model},
                     {"base_url", c.base_url},
                     {"script_path", c.script_path ? nlohmann::json(*c.script_path) : nlohmann::json(nullptr)},
                     {"temperature", c.temperature},
                     {"max_output_tokens", c.max_output_tokens},
                     {"max_refine", c.max_refine},
                     {"timeout_ms", c.limits.timeout_ms},
                     {"total_timeout_ms", c.limits.total_timeout_ms},
                     {"memory_limit_mb", c.limits.memory_limit_mb},
                     {"workers", c.workers},
                     {"cache_dir", c.cache_dir},
                     {"out_dir", c.out_dir},
                     {"runner_command", c.runner_command},
                     {"calls_per_task", c.calls_per_task}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c.suite_path = j.at("suite_path").get<std::string>();
  c.mode = mode_from_string(j.at("mode").get<std::string>());
  c.provider = j.at("provider").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.base_url = j.value("base_url", c.base_url);
  if (j.contains("script_path") && !j.at("script_path").is_null()) c.script_path = j.at("script_path").get<std::string>();
  c.temperature = j.at("temperature").get<double>();
  c.max_output_tokens = j.at("max_output_tokens").get<int>();
  c.max_refine = j.at("max_refine").get<int>();
  c.limits.timeout_ms = j.at("timeout_ms").get<int>();
  c.limits.total_timeout_ms = j.at("total_timeout_ms").get<int>();
  c.limits.memory_limit_mb = j.at("memory_limit_mb").get<int>();
  c.workers = j.at("workers").get<unsigned>();
  c.cache_dir = j.at("cache_dir").get<std::string>();
  c.out_dir = j.at("out_dir").get<std::string>();
  c.runner_command = j.at("runner_command").get<std::vector<std::string>>();
  c.calls_per_task = j.value("calls_per_task", c.calls_per_task);
}

void to_json(nlohmann::json& j, const TaskRun& r) {
  j = nlohmann::json{{"task_id", r.task_id},
                     {"mode", to_string(r.mode)},
                     {"completed", r.completed},
                     {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)},
                     {"deliberation", r.deliberation},
                     {"candidate", r.candidate ? nlohmann::json(*r.candidate) : nlohmann::json(nullptr)},
                     {"candidate_unavailable", r.candidate_unavailable},
                     {"initial_report", r.initial_report ? nlohmann::json(*r.initial_report) : nlohmann::json(nullptr)},
                     {"refinement", r.refinement ? nlohmann::json(*r.refinement) : nlohmann::json(nullptr)},
                     {"final_oracles", r.final_oracles},
                     {"exchanges", r.exchanges},
                     {"diagnostics", r.diagnostics},
                     {"wall_ms", r.wall_ms}};
}

void from_json(const nlohmann::json& j, TaskRun& r) {
  r.task_id = j.at("task_id").get<std::string>();
  r.mode = mode_from_string(j.at("mode").get<std::string>());
  r.completed = j.at("completed").get<bool>();
  r.error.reset();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  r.deliberation = j.at("deliberation").get<DeliberationResult>();
  r.candidate.reset();
  if (!j.at("candidate").is_null()) r.candidate = j.at("candidate").get<CandidateCode>();
  r.candidate_unavailable = j.at("candidate_unavailable").get<bool>();
  r.initial_report.reset();
  if (!j.at("initial_report").is_null()) r.initial_report = j.at("initial_report").get<ValidationReport>();
  r.refinement.reset();
  if (!j.at("refinement").is_null()) r.refinement = j.at("refinement").get<RefinementTrace>();
  r.final_oracles = j.at("final_oracles").get<OracleSet>();
  r.exchanges = j.at("exchanges").get<std::vector<ChatExchange>>();
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  r.wall_ms = j.at("wall_ms").get<std::int64_t>();
}

Pipeline::Pipeline(Gateway& gateway, const PromptLibrary& prompts, const Sandbox* sandbox, Mode mode,
                   ModelSettings model, int max_refine, ExecLimits limits)
    : gateway_(gateway),
      prompts_(prompts),
      sandbox_(sandbox),
      mode_(mode),
      model_(std::move(model)),
      max_refine_(max_refine),
      limits_(limits) {
  if (uses_validation(mode_) && sandbox_ == nullptr) {
    throw ConfigError("mode " + std::string(to_string(mode_)) + " requires a sandbox");
  }
}

TaskRun Pipeline::run_task(const Task& task, Transcript& transcript) const {
  const auto started = std::chrono::steady_clock::now();
  TaskRun run;
  run.task_id = task.task_id;
  run.mode = mode_;

  Deliberator deliberator(gateway_, prompts_, DeliberationOptions{model_, false, true});
  run.deliberation = uses_deliberation(mode_) ? deliberator.deliberate(task, transcript)
                                              : deliberator.direct(task, transcript);
  run.final_oracles = run.deliberation.candidate;

  if (uses_validation(mode_)) {
    auto outcome = generate_candidate(task, gateway_, prompts_, model_, transcript);
    Refiner refiner(gateway_, prompts_, model_, sandbox_validator(*sandbox_, limits_));
    if (!outcome.available()) {
      // No executable reference: the deliberated oracles pass through untouched.
      run.candidate_unavailable = true;
      auto [oracles, trace] = refiner.run_loop(task, std::nullopt, run.final_oracles, {}, max_refine_, transcript);
      run.refinement = std::move(trace);
    } else {
      run.candidate = outcome.code;
      run.initial_report = sandbox_->validate(*run.candidate, run.final_oracles, limits_);
      auto [oracles, trace] =
          refiner.run_loop(task, run.candidate, run.final_oracles, *run.initial_report, max_refine_, transcript);
      run.final_oracles = std::move(oracles);
      run.refinement = std::move(trace);
    }
  }

  run.exchanges = transcript.exchanges;
  run.diagnostics = transcript.diagnostics;
  run.completed = true;
  run.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return run;
}

}  // namespace oracle_forge
