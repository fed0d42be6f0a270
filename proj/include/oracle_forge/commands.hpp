#pragma once

#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oracle_forge/evaluation.hpp"
#include "oracle_forge/gateway.hpp"
#include "oracle_forge/pipeline.hpp"
#include "oracle_forge/run_store.hpp"

namespace oracle_forge {

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int partial = 3;
inline constexpr int provider = 4;
}  // namespace exit_codes

// Maps an escaped error to the documented exit code.
int exit_code_for(const std::exception& e);

inline constexpr std::string_view kApiKeyEnv = "ORACLE_FORGE_API_KEY";

struct CommandReport {
  int exit_code = exit_codes::ok;
  std::filesystem::path output;
  // Warnings and per-task failures, in the order they arose.
  std::vector<std::string> messages;
  std::size_t provider_calls = 0;
  std::size_t cache_hits = 0;
};

// Provider for a config: the scripted mock, or the chat-completions client keyed by
// ORACLE_FORGE_API_KEY. Throws ConfigError.
std::shared_ptr<Provider> make_provider(const RunConfig& config);

// Runs the pipeline over the suite and writes the record under config.out_dir.
// `provider` overrides make_provider (tests inject counting or failing providers).
CommandReport cmd_generate(const RunConfig& config, std::shared_ptr<Provider> provider = nullptr);

struct ScoringOptions {
  std::filesystem::path record_dir;
  // Defaults to the record's suite snapshot.
  std::optional<std::filesystem::path> suite_path;
  // Defaults to the record directory.
  std::optional<std::filesystem::path> out_dir;
  // Defaults to the runner recorded in the run config.
  std::vector<std::string> runner_command;
  std::optional<ExecLimits> limits;
  unsigned workers = 0;
};

// Writes accuracy/<id>.json, metrics.json and metrics.txt.
CommandReport cmd_evaluate(const ScoringOptions& options);
// Writes bug_detection.json and bug_detection.txt.
CommandReport cmd_bug_detect(const ScoringOptions& options);

struct SelfDebugOptions {
  ScoringOptions scoring;
  std::string provider = "scripted";
  std::string model = "scripted-model";
  std::string base_url = "https://api.openai.com/v1";
  std::optional<std::string> script_path;
  std::optional<std::filesystem::path> cache_dir;
};

// Writes self_debug.json and self_debug.txt.
CommandReport cmd_self_debug(const SelfDebugOptions& options, std::shared_ptr<Provider> provider = nullptr);

struct ReplayOptions {
  std::filesystem::path record_dir;
  // Defaults to "<record_dir>-replay".
  std::optional<std::filesystem::path> out_dir;
  std::vector<std::string> runner_command;
};

struct ReplayReport : CommandReport {
  bool identical = false;
  std::vector<std::string> differences;
};

// Re-runs every completed task of the record from its exchange store only. A reply missing
// from the store raises CacheMissError naming it.
ReplayReport cmd_replay(const ReplayOptions& options);

}  // namespace oracle_forge
