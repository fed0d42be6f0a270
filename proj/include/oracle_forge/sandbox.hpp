#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oracle_forge/deliberation.hpp"
#include "oracle_forge/gateway.hpp"
#include "oracle_forge/prompts.hpp"
#include "oracle_forge/task.hpp"

namespace oracle_forge {

inline constexpr std::size_t kMaxErrorMessage = 2000;

struct ExecLimits {
  int timeout_ms = 5000;
  int total_timeout_ms = 60000;
  int memory_limit_mb = 512;

  // Throws ConfigError unless all limits are positive and total >= per-assertion.
  void check() const;
};

enum class VerdictStatus { pass, assertion_failed, runtime_error, timeout, parse_error, not_executed, candidate_error };

std::string_view to_string(VerdictStatus status);
VerdictStatus verdict_status_from_string(std::string_view name);

struct Verdict {
  std::size_t input_index = 0;
  VerdictStatus status = VerdictStatus::not_executed;
  std::optional<std::string> error_type;
  std::optional<std::string> error_message;
  double elapsed_ms = 0.0;

  bool passed() const noexcept { return status == VerdictStatus::pass; }
};

struct CandidateCode {
  std::string source_text;
  std::string function_name;
  // Cache key of the exchange that produced the source; empty for hand-supplied code.
  std::string generation_key;
};

struct ValidationReport {
  std::string task_id;
  std::string candidate_digest;
  std::vector<Verdict> verdicts;
  bool all_pass = false;
};

struct FailedOracle {
  std::size_t input_index;
  Assertion assertion;
  Verdict verdict;
};

// Non-pass entries ascending by index. A candidate_error report yields every index.
std::vector<FailedOracle> failed_subset(const ValidationReport& report, const OracleSet& oracles);

struct SandboxOptions {
  // Interpreter command line for the runner, e.g. {"python3", "/opt/of/runner.py"}.
  std::vector<std::string> runner_command;
  // Concurrent runner processes; 0 means hardware concurrency.
  unsigned workers = 0;
  // Attempt a private network namespace for the runner (silently skipped when unsupported).
  bool isolate_network = true;
  std::size_t max_stdout_bytes = 16u << 20;
};

// Drives isolated runner processes. Copies share the worker pool.
class Sandbox {
 public:
  explicit Sandbox(SandboxOptions options);

  // One verdict per assertion regardless of crashes, hangs or unloadable candidates.
  // Throws RunnerSpawnError when the runner cannot start, ProtocolError on malformed output.
  std::vector<Verdict> execute(std::string_view source, std::string_view function_name,
                               const std::vector<std::string>& assertions, const ExecLimits& limits) const;

  ValidationReport validate(const CandidateCode& candidate, const OracleSet& oracles,
                            const ExecLimits& limits) const;

  const SandboxOptions& options() const noexcept { return options_; }

 private:
  struct Pool {
    std::mutex mutex;
    std::condition_variable cv;
    unsigned available = 0;
  };
  struct Slot;

  SandboxOptions options_;
  std::shared_ptr<Pool> pool_;
};

// The JSON object written to the runner's stdin.
nlohmann::json runner_job(std::string_view source, std::string_view function_name,
                          const std::vector<std::string>& assertions, int timeout_ms);

struct CandidateOutcome {
  std::optional<CandidateCode> code;
  std::vector<std::string> diagnostics;

  bool available() const noexcept { return code.has_value(); }
};

// Up to three formatted example calls for the candidate prompt.
std::string format_examples(const Task& task);

// One candidate_code call; a reply without a definition of the function earns one re-prompt,
// after which the candidate is reported unavailable.
CandidateOutcome generate_candidate(const Task& task, Gateway& gateway, const PromptLibrary& prompts,
                                    const ModelSettings& model, Transcript& transcript);

void to_json(nlohmann::json& j, const Verdict& v);
void from_json(const nlohmann::json& j, Verdict& v);
void to_json(nlohmann::json& j, const CandidateCode& c);
void from_json(const nlohmann::json& j, CandidateCode& c);
void to_json(nlohmann::json& j, const ValidationReport& r);
void from_json(const nlohmann::json& j, ValidationReport& r);

}  // namespace oracle_forge
