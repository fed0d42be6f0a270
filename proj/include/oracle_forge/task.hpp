#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace oracle_forge {

// Reference suites pin this many fixed inputs per task.
inline constexpr std::size_t kReferenceInputCount = 20;

struct Task {
  std::string task_id;
  std::string description;
  std::string function_name;
  // Raw argument-tuple snippets, e.g. "(1, 2)". Kept textual on purpose.
  std::vector<std::string> test_inputs;
  std::optional<std::string> canonical_solution;
  std::optional<std::vector<std::string>> hidden_tests;
  std::optional<std::vector<std::string>> buggy_variants;

  std::size_t input_count() const noexcept { return test_inputs.size(); }
  bool operator==(const Task&) const = default;
};

struct TaskSuite {
  std::string suite_id;
  std::vector<Task> tasks;
  std::string source_path;

  const Task* find(std::string_view task_id) const;
  bool operator==(const TaskSuite&) const = default;
};

enum class Severity { warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

bool is_identifier(std::string_view name);

// One diagnostic per violated invariant; empty when the task is fully valid.
// Fewer than kReferenceInputCount inputs produces a warning only.
std::vector<Diagnostic> validate_task(const Task& task);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

// Throws IoError, FormatError (with 1-based line number) or DuplicateIdError.
TaskSuite load_suite(const std::filesystem::path& path);
TaskSuite parse_suite(std::string_view text, std::string suite_id, std::string source_path = {});

std::string serialize_suite(const TaskSuite& suite);

void to_json(nlohmann::json& j, const Task& task);
void from_json(const nlohmann::json& j, Task& task);

}  // namespace oracle_forge
