#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracle_forge/deliberation.hpp"
#include "oracle_forge/sandbox.hpp"

namespace oracle_forge {

struct AccuracyRecord {
  std::string task_id;
  std::vector<bool> per_assertion_correct;
  bool task_correct = false;
  std::vector<Verdict> verdicts;
};

// Correct iff the verdict is pass; every other status counts against the oracle.
AccuracyRecord accuracy_from_verdicts(std::string task_id, const std::vector<Verdict>& verdicts);

// Runs the oracle set against the canonical solution. Throws MissingCanonicalError.
AccuracyRecord score_oracles(const Sandbox& sandbox, const OracleSet& oracles, const Task& task,
                             const ExecLimits& limits);

struct MetricsSummary {
  double task_level_pct = 0.0;
  double test_level_pct = 0.0;
  std::size_t n_tasks = 0;
  std::size_t n_assertions = 0;
  std::size_t correct_tasks = 0;
  std::size_t correct_assertions = 0;
};

// Throws EmptyInputError on an empty record list.
MetricsSummary aggregate(const std::vector<AccuracyRecord>& records);

// 100 * numerator / denominator with two decimals, rounded half-up on exact integers.
std::string format_pct(std::uint64_t numerator, std::uint64_t denominator);

struct BugDetectionRecord {
  std::string task_id;
  std::size_t variant_index = 0;
  bool detected = false;
  std::vector<std::size_t> triggering_indices;
};

struct BugDetectionResult {
  std::vector<BugDetectionRecord> records;
  // Variants left out of the denominator because no verified-correct oracle exists.
  std::size_t excluded_variants = 0;
  std::vector<std::string> diagnostics;
};

// Keeps only the assertions the accuracy record marks correct.
OracleSet correct_subset(const OracleSet& oracles, const AccuracyRecord& record);

// Throws NoBuggyVariantsError.
BugDetectionResult bug_detection(const Sandbox& sandbox, const OracleSet& oracles, const AccuracyRecord& record,
                                 const Task& task, const ExecLimits& limits);

struct RateSummary {
  std::size_t hits = 0;
  std::size_t total = 0;
  std::string pct() const { return total ? format_pct(hits, total) : "n/a"; }
};

RateSummary detection_rate(const std::vector<BugDetectionResult>& results);

struct SelfDebugRecord {
  std::string task_id;
  std::size_t variant_index = 0;
  std::optional<Assertion> feedback_assertion;
  std::optional<Verdict> feedback_verdict;
  // Whether the feedback oracle is itself correct against the canonical solution, when known.
  std::optional<bool> feedback_correct;
  std::string repaired_source;
  bool hidden_pass = false;
  std::vector<std::string> diagnostics;
};

struct SelfDebugContext {
  const Sandbox& sandbox;
  Gateway& gateway;
  const PromptLibrary& prompts;
  ModelSettings model;
  ExecLimits limits;
};

// Feeds the lowest-index failing oracle back for one repair round, then runs the hidden tests.
// Without any failing oracle, hidden_pass is measured on the unrepaired source and a
// NoFailingOracleError diagnostic is recorded.
SelfDebugRecord self_debug(const SelfDebugContext& ctx, const Task& task, std::size_t variant_index,
                           const OracleSet& oracles, const AccuracyRecord* record, Transcript& transcript);

RateSummary self_debug_rate(const std::vector<SelfDebugRecord>& records);

void to_json(nlohmann::json& j, const AccuracyRecord& r);
void from_json(const nlohmann::json& j, AccuracyRecord& r);
void to_json(nlohmann::json& j, const MetricsSummary& m);
void to_json(nlohmann::json& j, const BugDetectionRecord& r);
void to_json(nlohmann::json& j, const SelfDebugRecord& r);

}  // namespace oracle_forge
