#include "oracle_forge/run_store.hpp"

#include <ctime>

namespace oracle_forge {

namespace fs = std::filesystem;

namespace {

// Keys whose values depend on wall clock, cache warmth or where the record lives.
constexpr std::string_view kVolatileKeys[] = {
    "latency_ms", "elapsed_ms",  "wall_ms",   "created_at", "updated_at",
    "finished_at", "cache_hit", "attempt_count", "out_dir",  "cache_dir",
};

nlohmann::json read_json(const fs::path& path) {
  auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void collect_differences(const nlohmann::json& a, const nlohmann::json& b, const std::string& at,
                         std::vector<std::string>& out, std::size_t limit) {
  if (out.size() >= limit || a == b) return;
  if (a.is_object() && b.is_object()) {
    for (const auto& [key, value] : a.items()) {
      auto path = at + "/" + key;
      if (!b.contains(key)) {
        out.push_back(path + " (only in first)");
      } else {
        collect_differences(value, b.at(key), path, out, limit);
      }
      if (out.size() >= limit) return;
    }
    for (const auto& [key, value] : b.items()) {
      if (!a.contains(key) && out.size() < limit) out.push_back(at + "/" + key + " (only in second)");
    }
    return;
  }
  if (a.is_array() && b.is_array() && a.size() == b.size()) {
    for (std::size_t i = 0; i < a.size() && out.size() < limit; ++i) {
      collect_differences(a[i], b[i], at + "/" + std::to_string(i), out, limit);
    }
    return;
  }
  out.push_back(at.empty() ? "/" : at);
}

}  // namespace

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void check_schema_version(std::string_view version) {
  auto major = [](std::string_view v) { return v.substr(0, v.find('.')); };
  if (version.empty() || major(version) != major(kRecordSchemaVersion)) {
    throw SchemaVersionError("run record schema " + std::string(version) + " is not readable by this build (expects " +
                             std::string(major(kRecordSchemaVersion)) + ".x)");
  }
}

RunStore RunStore::create(const fs::path& dir, const RunConfig& config, const TaskSuite& suite, bool resume) {
  RunStore store(dir);
  const auto manifest_path = dir / "record.json";
  nlohmann::json manifest;
  if (resume && fs::exists(manifest_path)) {
    manifest = read_json(manifest_path);
    check_schema_version(manifest.value("schema_version", ""));
    if (manifest.value("suite_id", "") != suite.suite_id) {
      throw ConfigError("cannot resume " + dir.string() + ": it records suite '" + manifest.value("suite_id", "") +
                        "', not '" + suite.suite_id + "'");
    }
  } else {
    std::error_code ec;
    fs::remove_all(dir / "tasks", ec);
    manifest = {{"schema_version", kRecordSchemaVersion},
                {"tool_version", kToolVersion},
                {"created_at", utc_timestamp()}};
  }
  fs::create_directories(dir / "tasks");
  fs::create_directories(dir / "exchanges");

  std::vector<std::string> ids;
  for (const auto& t : suite.tasks) ids.push_back(t.task_id);
  manifest["suite_id"] = suite.suite_id;
  manifest["mode"] = to_string(config.mode);
  manifest["task_ids"] = ids;
  manifest["status"] = "running";
  manifest["updated_at"] = utc_timestamp();

  nlohmann::json config_json = config;
  write_json(dir / "config.json", config_json);
  write_file_atomic(dir / "suite.jsonl", serialize_suite(suite));
  write_json(manifest_path, manifest);
  return store;
}

RunStore RunStore::open(const fs::path& dir) {
  const auto manifest_path = dir / "record.json";
  if (!fs::exists(manifest_path)) throw IoError("no run record at " + dir.string() + " (record.json missing)");
  auto manifest = read_json(manifest_path);
  check_schema_version(manifest.value("schema_version", ""));
  return RunStore(dir);
}

fs::path RunStore::task_path(std::string_view task_id) const {
  // Task ids such as "HumanEval/0" carry path separators.
  std::string name(task_id);
  for (auto& c : name) {
    if (c == '/' || c == '\\') c = '_';
  }
  return dir_ / "tasks" / (name + ".json");
}

void RunStore::write_task(const TaskRun& run) const {
  nlohmann::json j = run;
  write_json(task_path(run.task_id), j);
}

bool RunStore::has_completed(std::string_view task_id) const {
  auto run = load_task(task_id);
  return run && run->completed;
}

std::optional<TaskRun> RunStore::load_task(std::string_view task_id) const {
  auto path = task_path(task_id);
  if (!fs::exists(path)) return std::nullopt;
  try {
    return read_json(path).get<TaskRun>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed task record " + path.string() + ": " + e.what());
  }
}

RunConfig RunStore::config() const {
  try {
    return read_json(dir_ / "config.json").get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed config.json in " + dir_.string() + ": " + e.what());
  }
}

TaskSuite RunStore::suite() const {
  auto text = read_file(dir_ / "suite.jsonl");
  return parse_suite(text, manifest().value("suite_id", ""), (dir_ / "suite.jsonl").string());
}

nlohmann::json RunStore::manifest() const { return read_json(dir_ / "record.json"); }

void RunStore::finalize(std::string_view status) const {
  auto m = manifest();
  m["status"] = status;
  m["updated_at"] = utc_timestamp();
  m["finished_at"] = utc_timestamp();
  write_json(dir_ / "record.json", m);
}

RunRecord load_record(const fs::path& dir) {
  auto store = RunStore::open(dir);
  RunRecord record;
  record.manifest = store.manifest();
  record.config = store.config();
  record.suite = store.suite();
  for (const auto& task : record.suite.tasks) {
    if (auto run = store.load_task(task.task_id)) record.tasks.emplace(task.task_id, std::move(*run));
  }
  return record;
}

nlohmann::json strip_volatile(nlohmann::json value) {
  if (value.is_object()) {
    for (auto key : kVolatileKeys) value.erase(std::string(key));
    for (auto& [key, child] : value.items()) child = strip_volatile(std::move(child));
  } else if (value.is_array()) {
    for (auto& child : value) child = strip_volatile(std::move(child));
  }
  return value;
}

nlohmann::json canonical_view(const RunRecord& record) {
  nlohmann::json config = record.config;
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [id, run] : record.tasks) tasks[id] = run;
  nlohmann::json view{{"schema_version", record.manifest.value("schema_version", "")},
                      {"suite_id", record.manifest.value("suite_id", "")},
                      {"mode", record.manifest.value("mode", "")},
                      {"task_ids", record.manifest.value("task_ids", nlohmann::json::array())},
                      {"config", config},
                      {"suite", serialize_suite(record.suite)},
                      {"tasks", tasks}};
  return strip_volatile(std::move(view));
}

std::vector<std::string> record_differences(const nlohmann::json& a, const nlohmann::json& b, std::size_t limit) {
  std::vector<std::string> out;
  collect_differences(a, b, "", out, limit);
  return out;
}

}  // namespace oracle_forge
