#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracle_forge/deliberation.hpp"
#include "oracle_forge/refinement.hpp"
#include "oracle_forge/sandbox.hpp"

namespace oracle_forge {

// direct: tentative only. planning_only: deliberation without validation.
// refinement_only: tentative + validation + refinement. full: all three phases.
enum class Mode { direct, planning_only, refinement_only, full };

std::string_view to_string(Mode mode);
// Throws ConfigError.
Mode mode_from_string(std::string_view name);

bool uses_deliberation(Mode mode);
bool uses_validation(Mode mode);

struct RunConfig {
  std::string suite_path;
  Mode mode = Mode::full;
  // "scripted" (needs script_path) or "openai" for any chat-completions compatible endpoint.
  std::string provider = "scripted";
  std::string model = "scripted-model";
  std::string base_url = "https://api.openai.com/v1";
  std::optional<std::string> script_path;
  double temperature = 0.0;
  int max_output_tokens = kDefaultMaxOutputTokens;
  int max_refine = kDefaultRefinementIterations;
  bool max_refine_explicit = false;
  ExecLimits limits;
  unsigned workers = 1;
  std::string cache_dir = ".oracle-forge-cache";
  std::string out_dir = "run";
  bool resume = false;
  std::vector<std::string> runner_command;
  // Provider calls allowed per task; the run budget is this times the task count.
  std::size_t calls_per_task = 64;

  // Throws ConfigError on invalid settings; returns non-fatal warnings.
  std::vector<std::string> check() const;
  ModelSettings model_settings() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

struct TaskRun {
  std::string task_id;
  Mode mode = Mode::full;
  bool completed = false;
  std::optional<std::string> error;
  DeliberationResult deliberation;
  std::optional<CandidateCode> candidate;
  bool candidate_unavailable = false;
  std::optional<ValidationReport> initial_report;
  std::optional<RefinementTrace> refinement;
  OracleSet final_oracles;
  std::vector<ChatExchange> exchanges;
  std::vector<std::string> diagnostics;
  std::int64_t wall_ms = 0;

  std::size_t deliberation_exchange_count() const noexcept { return deliberation.exchanges.size(); }
};

void to_json(nlohmann::json& j, const TaskRun& r);
void from_json(const nlohmann::json& j, TaskRun& r);

// Runs the configured phases for one task. Provider and sandbox errors propagate; the partial
// transcript is left in `transcript` for the caller to persist.
class Pipeline {
 public:
  Pipeline(Gateway& gateway, const PromptLibrary& prompts, const Sandbox* sandbox, Mode mode, ModelSettings model,
           int max_refine, ExecLimits limits);

  TaskRun run_task(const Task& task, Transcript& transcript) const;

 private:
  Gateway& gateway_;
  const PromptLibrary& prompts_;
  const Sandbox* sandbox_;
  Mode mode_;
  ModelSettings model_;
  int max_refine_;
  ExecLimits limits_;
};

}  // namespace oracle_forge
