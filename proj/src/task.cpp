#include "oracle_forge/task.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "oracle_forge/errors.hpp"

namespace oracle_forge {

namespace {

constexpr const char* kRequiredFields[] = {"task_id", "description", "function_name", "test_inputs"};

std::vector<std::string> string_list(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_string()) throw std::invalid_argument(std::string(field) + " must be an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

const Task* TaskSuite::find(std::string_view task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  for (unsigned char c : name) {
    if (!(std::isalnum(c) || c == '_')) return false;
  }
  return true;
}

std::vector<Diagnostic> validate_task(const Task& task) {
  std::vector<Diagnostic> out;
  if (task.task_id.empty()) out.push_back({Severity::error, "task_id empty"});
  if (task.test_inputs.empty()) {
    out.push_back({Severity::error, "test_inputs empty"});
  } else if (task.test_inputs.size() < kReferenceInputCount) {
    out.push_back({Severity::warning, "test_inputs has " + std::to_string(task.test_inputs.size()) +
                                          " entries; reference suites carry " +
                                          std::to_string(kReferenceInputCount)});
  }
  for (std::size_t i = 0; i < task.test_inputs.size(); ++i) {
    if (task.test_inputs[i].find('\n') != std::string::npos) {
      out.push_back({Severity::error, "test_inputs[" + std::to_string(i) + "] spans multiple lines"});
    }
  }
  if (!is_identifier(task.function_name)) {
    out.push_back({Severity::error, "function_name '" + task.function_name + "' is not a valid identifier"});
  } else {
    bool mentioned = task.description.find(task.function_name) != std::string::npos;
    if (task.canonical_solution) {
      mentioned = mentioned || task.canonical_solution->find(task.function_name) != std::string::npos;
    }
    if (!mentioned) {
      out.push_back({Severity::error, "function_name '" + task.function_name +
                                          "' occurs in neither description nor canonical_solution"});
    }
  }
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::error) return true;
  }
  return false;
}

void to_json(nlohmann::json& j, const Task& task) {
  j = nlohmann::json{{"task_id", task.task_id},
                     {"description", task.description},
                     {"function_name", task.function_name},
                     {"test_inputs", task.test_inputs}};
  if (task.canonical_solution) j["canonical_solution"] = *task.canonical_solution;
  if (task.hidden_tests) j["hidden_tests"] = *task.hidden_tests;
  if (task.buggy_variants) j["buggy_variants"] = *task.buggy_variants;
}

void from_json(const nlohmann::json& j, Task& task) {
  if (!j.is_object()) throw std::invalid_argument("task must be a JSON object");
  for (const char* field : kRequiredFields) {
    if (!j.contains(field)) throw std::invalid_argument(std::string("missing \"") + field + "\"");
  }
  for (const char* field : {"task_id", "description", "function_name"}) {
    if (!j.at(field).is_string()) throw std::invalid_argument(std::string(field) + " must be a string");
  }
  task.task_id = j.at("task_id").get<std::string>();
  task.description = j.at("description").get<std::string>();
  task.function_name = j.at("function_name").get<std::string>();
  task.test_inputs = string_list(j.at("test_inputs"), "test_inputs");
  task.canonical_solution.reset();
  task.hidden_tests.reset();
  task.buggy_variants.reset();
  if (auto it = j.find("canonical_solution"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("canonical_solution must be a string");
    task.canonical_solution = it->get<std::string>();
  }
  if (auto it = j.find("hidden_tests"); it != j.end() && !it->is_null()) {
    task.hidden_tests = string_list(*it, "hidden_tests");
  }
  if (auto it = j.find("buggy_variants"); it != j.end() && !it->is_null()) {
    task.buggy_variants = string_list(*it, "buggy_variants");
  }
}

TaskSuite parse_suite(std::string_view text, std::string suite_id, std::string source_path) {
  TaskSuite suite{std::move(suite_id), {}, std::move(source_path)};
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Task task;
    try {
      from_json(nlohmann::json::parse(line), task);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(line_no, e.what());
    }
    auto diagnostics = validate_task(task);
    for (const auto& d : diagnostics) {
      if (d.severity == Severity::error) throw FormatError(line_no, d.message);
    }
    if (!seen.insert(task.task_id).second) throw DuplicateIdError(task.task_id);
    suite.tasks.push_back(std::move(task));
  }
  return suite;
}

TaskSuite load_suite(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read task suite " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return parse_suite(buf.str(), path.stem().string(), path.string());
}

std::string serialize_suite(const TaskSuite& suite) {
  std::string out;
  for (const auto& task : suite.tasks) {
    nlohmann::json j = task;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace oracle_forge
