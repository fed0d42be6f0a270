#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oracle_forge/fs_util.hpp"
#include "oracle_forge/pipeline.hpp"
#include "oracle_forge/task.hpp"

namespace oracle_forge {

inline constexpr std::string_view kRecordSchemaVersion = "1.0";
inline constexpr std::string_view kToolVersion = "0.1.0";

// "2026-01-31T12:00:00Z"
std::string utc_timestamp();

// Throws SchemaVersionError unless the major version matches kRecordSchemaVersion.
void check_schema_version(std::string_view version);

// Record directory layout:
//   record.json          manifest (schema, tool version, timestamps, task order, status)
//   config.json          RunConfig snapshot
//   suite.jsonl          suite snapshot, so the record needs nothing else to replay or score
//   tasks/<id>.json      one TaskRun per task, written when the task finishes
//   exchanges/<key>.txt  every reply served, in the response cache format
class RunStore {
 public:
  // Starts a record. With `resume`, an existing record for the same suite is reopened and
  // its finished tasks kept; otherwise any previous task files are discarded.
  static RunStore create(const std::filesystem::path& dir, const RunConfig& config, const TaskSuite& suite,
                         bool resume);
  // Throws IoError when the manifest is missing, SchemaVersionError on an unknown major version.
  static RunStore open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path exchanges_dir() const { return dir_ / "exchanges"; }
  std::filesystem::path task_path(std::string_view task_id) const;

  void write_task(const TaskRun& run) const;
  bool has_completed(std::string_view task_id) const;
  std::optional<TaskRun> load_task(std::string_view task_id) const;

  RunConfig config() const;
  TaskSuite suite() const;
  nlohmann::json manifest() const;

  // Stamps status ("complete" or "partial") and the finish time into the manifest.
  void finalize(std::string_view status) const;

 private:
  explicit RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::filesystem::path dir_;
};

struct RunRecord {
  nlohmann::json manifest;
  RunConfig config;
  TaskSuite suite;
  // Keyed by task id; tasks never started are absent.
  std::map<std::string, TaskRun> tasks;
};

RunRecord load_record(const std::filesystem::path& dir);

// The record minus everything that legitimately differs between two runs over the same
// exchanges: timings, timestamps, cache-hit and attempt counters, and output locations.
nlohmann::json canonical_view(const RunRecord& record);
nlohmann::json strip_volatile(nlohmann::json value);

// JSON pointer paths where two canonical views disagree; empty when equal.
std::vector<std::string> record_differences(const nlohmann::json& a, const nlohmann::json& b,
                                            std::size_t limit = 20);

}  // namespace oracle_forge
