#include "oracle_forge/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace oracle_forge {

namespace fs = std::filesystem;

namespace {

// Runs fn(0..n-1) on up to `workers` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  std::size_t wanted = std::min<std::size_t>(std::max(workers, 1u), n);
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < wanted; ++t) threads.emplace_back(loop);
  loop();
  for (auto& t : threads) t.join();
}

bool is_provider_error(const std::exception& e) {
  return dynamic_cast<const ProviderError*>(&e) || dynamic_cast<const BudgetError*>(&e) ||
         dynamic_cast<const ScriptMissError*>(&e) || dynamic_cast<const CacheMissError*>(&e);
}

std::string safe_name(std::string_view task_id) {
  std::string name(task_id);
  for (auto& c : name) {
    if (c == '/' || c == '\\') c = '_';
  }
  return name;
}

double rounded_pct(std::uint64_t n, std::uint64_t d) { return d ? std::stod(format_pct(n, d)) : 0.0; }

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// Rows of cells rendered as aligned columns; the first row is the header.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += c == 0 ? pad(row[c], widths[c]) : lpad(row[c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

struct ScoringContext {
  RunRecord record;
  TaskSuite suite;
  fs::path out_dir;
  ExecLimits limits;
  std::unique_ptr<Sandbox> sandbox;
  unsigned workers = 1;
};

ScoringContext open_scoring(const ScoringOptions& options) {
  ScoringContext ctx;
  ctx.record = load_record(options.record_dir);
  ctx.suite = options.suite_path ? load_suite(*options.suite_path) : ctx.record.suite;
  ctx.out_dir = options.out_dir.value_or(options.record_dir);
  ctx.limits = options.limits.value_or(ctx.record.config.limits);
  ctx.limits.check();
  auto runner = options.runner_command.empty() ? ctx.record.config.runner_command : options.runner_command;
  if (runner.empty()) throw ConfigError("no sandbox runner configured (--runner or ORACLE_FORGE_RUNNER)");
  ctx.workers = options.workers ? options.workers : std::max(1u, ctx.record.config.workers);
  ctx.sandbox = std::make_unique<Sandbox>(SandboxOptions{runner, ctx.workers, true, 16u << 20});
  fs::create_directories(ctx.out_dir);
  return ctx;
}

// Tasks of the suite that the record finished, in suite order.
std::vector<std::pair<const Task*, const TaskRun*>> scorable(const ScoringContext& ctx,
                                                             std::vector<std::string>& messages) {
  std::vector<std::pair<const Task*, const TaskRun*>> out;
  for (const auto& task : ctx.suite.tasks) {
    auto it = ctx.record.tasks.find(task.task_id);
    if (it == ctx.record.tasks.end() || !it->second.completed) {
      messages.push_back(task.task_id + ": not completed in the record; skipped");
      continue;
    }
    out.emplace_back(&task, &it->second);
  }
  return out;
}

struct ScoredTask {
  std::optional<AccuracyRecord> accuracy;
  std::optional<std::string> error;
};

std::vector<ScoredTask> score_all(const ScoringContext& ctx,
                                  const std::vector<std::pair<const Task*, const TaskRun*>>& tasks) {
  std::vector<ScoredTask> scored(tasks.size());
  parallel_for(tasks.size(), ctx.workers, [&](std::size_t i) {
    try {
      scored[i].accuracy = score_oracles(*ctx.sandbox, tasks[i].second->final_oracles, *tasks[i].first, ctx.limits);
    } catch (const std::exception& e) {
      scored[i].error = e.what();
    }
  });
  return scored;
}

// Never reaches a provider; replay runs entirely from the exchange store.
class NoProvider : public Provider {
 public:
  std::string send(const ChatRequest& request) override {
    throw ProviderError("no provider available for request " + request.request_tag);
  }
  bool is_live() const override { return false; }
};

}  // namespace

int exit_code_for(const std::exception& e) {
  if (is_provider_error(e)) return exit_codes::provider;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const DuplicateIdError*>(&e) || dynamic_cast<const SchemaVersionError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const MissingBindingError*>(&e) ||
      dynamic_cast<const UnknownTemplateError*>(&e) || dynamic_cast<const RunnerSpawnError*>(&e)) {
    return exit_codes::config;
  }
  return exit_codes::partial;
}

std::shared_ptr<Provider> make_provider(const RunConfig& config) {
  if (config.provider == "scripted") {
    if (!config.script_path) throw ConfigError("the scripted provider needs --script");
    return std::make_shared<ScriptedProvider>(ProviderScript::load(*config.script_path));
  }
  if (config.provider == "openai") {
    const char* key = std::getenv(std::string(kApiKeyEnv).c_str());
    if (!key || !*key) throw ConfigError(std::string(kApiKeyEnv) + " is not set");
    return std::make_shared<HttpProvider>(HttpProviderOptions{config.base_url, key});
  }
  throw ConfigError("unknown provider '" + config.provider + "' (scripted, openai)");
}

CommandReport cmd_generate(const RunConfig& config, std::shared_ptr<Provider> provider) {
  CommandReport report;
  report.messages = config.check();
  auto suite = load_suite(config.suite_path);
  if (suite.tasks.empty()) throw ConfigError("task suite " + config.suite_path + " is empty");
  for (const auto& task : suite.tasks) {
    for (const auto& d : validate_task(task)) report.messages.push_back(task.task_id + ": " + d.message);
  }
  if (!provider) provider = make_provider(config);

  auto store = RunStore::create(config.out_dir, config, suite, config.resume);
  report.output = store.dir();

  GatewayOptions gateway_options;
  gateway_options.cache_dir = config.cache_dir;
  gateway_options.mirror_dir = store.exchanges_dir();
  gateway_options.call_budget = config.calls_per_task * suite.tasks.size();
  Gateway gateway(provider, gateway_options);

  std::unique_ptr<Sandbox> sandbox;
  if (!config.runner_command.empty()) {
    sandbox = std::make_unique<Sandbox>(SandboxOptions{config.runner_command, config.workers, true, 16u << 20});
  }
  Pipeline pipeline(gateway, PromptLibrary::builtin(), sandbox.get(), config.mode, config.model_settings(),
                    config.max_refine, config.limits);

  std::vector<const Task*> pending;
  for (const auto& task : suite.tasks) {
    if (config.resume && store.has_completed(task.task_id)) {
      report.messages.push_back(task.task_id + ": already completed; skipped");
      continue;
    }
    pending.push_back(&task);
  }

  std::mutex mutex;
  bool provider_failure = false;
  std::size_t failures = 0;
  parallel_for(pending.size(), config.workers, [&](std::size_t i) {
    const Task& task = *pending[i];
    Transcript transcript;
    TaskRun run;
    try {
      run = pipeline.run_task(task, transcript);
    } catch (const std::exception& e) {
      run = TaskRun{};
      run.task_id = task.task_id;
      run.mode = config.mode;
      run.error = e.what();
      run.exchanges = transcript.exchanges;
      run.diagnostics = transcript.diagnostics;
      std::lock_guard lock(mutex);
      ++failures;
      provider_failure = provider_failure || is_provider_error(e);
      report.messages.push_back(task.task_id + ": " + e.what());
    }
    try {
      store.write_task(run);
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex);
      ++failures;
      report.messages.push_back(task.task_id + ": record write failed: " + e.what());
    }
  });

  store.finalize(failures ? "partial" : "complete");
  report.provider_calls = gateway.provider_calls();
  report.cache_hits = gateway.cache_hits();
  if (failures) report.exit_code = provider_failure ? exit_codes::provider : exit_codes::partial;
  return report;
}

CommandReport cmd_evaluate(const ScoringOptions& options) {
  CommandReport report;
  auto ctx = open_scoring(options);
  auto tasks = scorable(ctx, report.messages);
  auto scored = score_all(ctx, tasks);

  fs::create_directories(ctx.out_dir / "accuracy");
  std::vector<AccuracyRecord> records;
  nlohmann::json per_task = nlohmann::json::array();
  std::vector<std::vector<std::string>> rows{{"task_id", "correct", "total", "test_pct", "task_correct"}};
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& id = tasks[i].first->task_id;
    if (scored[i].error) {
      report.messages.push_back(id + ": " + *scored[i].error);
      per_task.push_back({{"task_id", id}, {"error", *scored[i].error}});
      rows.push_back({id, "-", "-", "-", "error"});
      continue;
    }
    const auto& acc = *scored[i].accuracy;
    auto correct = static_cast<std::uint64_t>(
        std::count(acc.per_assertion_correct.begin(), acc.per_assertion_correct.end(), true));
    auto total = static_cast<std::uint64_t>(acc.per_assertion_correct.size());
    write_json(ctx.out_dir / "accuracy" / (safe_name(id) + ".json"), acc);
    per_task.push_back({{"task_id", id},
                        {"correct_assertions", correct},
                        {"n_assertions", total},
                        {"test_level_pct", rounded_pct(correct, total)},
                        {"task_correct", acc.task_correct},
                        {"per_assertion_correct", acc.per_assertion_correct}});
    rows.push_back({id, std::to_string(correct), std::to_string(total), format_pct(correct, total),
                    acc.task_correct ? "yes" : "no"});
    records.push_back(acc);
  }
  auto summary = aggregate(records);
  rows.push_back({"ALL", std::to_string(summary.correct_assertions), std::to_string(summary.n_assertions),
                  format_pct(summary.correct_assertions, summary.n_assertions),
                  std::to_string(summary.correct_tasks) + "/" + std::to_string(summary.n_tasks)});

  nlohmann::json metrics{{"suite", ctx.suite.suite_id},
                         {"mode", ctx.record.manifest.value("mode", "")},
                         {"task_level_pct", rounded_pct(summary.correct_tasks, summary.n_tasks)},
                         {"test_level_pct", rounded_pct(summary.correct_assertions, summary.n_assertions)},
                         {"n_tasks", summary.n_tasks},
                         {"n_assertions", summary.n_assertions},
                         {"correct_tasks", summary.correct_tasks},
                         {"correct_assertions", summary.correct_assertions},
                         {"per_task", per_task}};
  std::string table = render_table(rows);
  table += "\ntask-level " + format_pct(summary.correct_tasks, summary.n_tasks) + "  test-level " +
           format_pct(summary.correct_assertions, summary.n_assertions) + "\n";
  write_json(ctx.out_dir / "metrics.json", metrics);
  write_file_atomic(ctx.out_dir / "metrics.txt", table);
  report.output = ctx.out_dir / "metrics.json";
  if (records.size() != tasks.size() || tasks.size() != ctx.suite.tasks.size()) report.exit_code = exit_codes::partial;
  return report;
}

CommandReport cmd_bug_detect(const ScoringOptions& options) {
  CommandReport report;
  auto ctx = open_scoring(options);
  auto tasks = scorable(ctx, report.messages);
  auto scored = score_all(ctx, tasks);

  std::vector<std::optional<BugDetectionResult>> results(tasks.size());
  std::vector<std::optional<std::string>> errors(tasks.size());
  parallel_for(tasks.size(), ctx.workers, [&](std::size_t i) {
    if (scored[i].error) {
      errors[i] = *scored[i].error;
      return;
    }
    try {
      results[i] = bug_detection(*ctx.sandbox, tasks[i].second->final_oracles, *scored[i].accuracy,
                                 *tasks[i].first, ctx.limits);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<BugDetectionResult> ok;
  nlohmann::json records = nlohmann::json::array();
  std::vector<std::vector<std::string>> rows{{"task_id", "variant", "detected", "triggering_indices"}};
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& id = tasks[i].first->task_id;
    if (errors[i]) {
      report.messages.push_back(id + ": " + *errors[i]);
      continue;
    }
    excluded += results[i]->excluded_variants;
    for (const auto& d : results[i]->diagnostics) report.messages.push_back(d);
    for (const auto& r : results[i]->records) {
      records.push_back(r);
      std::string triggers;
      for (auto idx : r.triggering_indices) triggers += (triggers.empty() ? "" : ",") + std::to_string(idx);
      rows.push_back({id, std::to_string(r.variant_index), r.detected ? "yes" : "no", triggers.empty() ? "-" : triggers});
    }
    ok.push_back(std::move(*results[i]));
  }
  auto rate = detection_rate(ok);
  nlohmann::json out{{"suite", ctx.suite.suite_id},
                     {"mode", ctx.record.manifest.value("mode", "")},
                     {"detection_rate_pct", rate.total ? nlohmann::json(rounded_pct(rate.hits, rate.total))
                                                       : nlohmann::json(nullptr)},
                     {"detected", rate.hits},
                     {"variants", rate.total},
                     {"excluded_variants", excluded},
                     {"records", records},
                     {"messages", report.messages}};
  std::string table = render_table(rows);
  table += "\ndetection rate " + rate.pct() + " (" + std::to_string(rate.hits) + "/" + std::to_string(rate.total) +
           ", " + std::to_string(excluded) + " excluded)\n";
  write_json(ctx.out_dir / "bug_detection.json", out);
  write_file_atomic(ctx.out_dir / "bug_detection.txt", table);
  report.output = ctx.out_dir / "bug_detection.json";
  if (rate.total == 0) report.exit_code = exit_codes::partial;
  return report;
}

CommandReport cmd_self_debug(const SelfDebugOptions& options, std::shared_ptr<Provider> provider) {
  CommandReport report;
  auto ctx = open_scoring(options.scoring);
  auto tasks = scorable(ctx, report.messages);

  RunConfig provider_config = ctx.record.config;
  provider_config.provider = options.provider;
  provider_config.model = options.model;
  provider_config.base_url = options.base_url;
  provider_config.script_path = options.script_path;
  if (!provider) provider = make_provider(provider_config);

  GatewayOptions gateway_options;
  gateway_options.cache_dir = options.cache_dir.value_or(fs::path(ctx.record.config.cache_dir));
  gateway_options.mirror_dir = options.scoring.record_dir / "exchanges";
  Gateway gateway(provider, gateway_options);
  SelfDebugContext sd{*ctx.sandbox, gateway, PromptLibrary::builtin(), provider_config.model_settings(), ctx.limits};

  struct Job {
    std::size_t task;
    std::size_t variant;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = *tasks[i].first;
    if (!task.buggy_variants || task.buggy_variants->empty()) {
      report.messages.push_back(task.task_id + ": no buggy_variants; skipped");
      continue;
    }
    if (!task.hidden_tests || task.hidden_tests->empty()) {
      report.messages.push_back(task.task_id + ": no hidden_tests; skipped");
      continue;
    }
    for (std::size_t v = 0; v < task.buggy_variants->size(); ++v) jobs.push_back({i, v});
  }

  // Accuracy of the oracles is recorded alongside feedback when a canonical solution exists.
  auto scored = score_all(ctx, tasks);
  std::vector<std::optional<SelfDebugRecord>> records(jobs.size());
  std::vector<std::optional<std::string>> errors(jobs.size());
  std::mutex mutex;
  bool provider_failure = false;
  parallel_for(jobs.size(), ctx.workers, [&](std::size_t j) {
    const auto& [ti, v] = jobs[j];
    Transcript transcript;
    try {
      const AccuracyRecord* acc = scored[ti].accuracy ? &*scored[ti].accuracy : nullptr;
      records[j] = self_debug(sd, *tasks[ti].first, v, tasks[ti].second->final_oracles, acc, transcript);
    } catch (const std::exception& e) {
      errors[j] = e.what();
      std::lock_guard lock(mutex);
      provider_failure = provider_failure || is_provider_error(e);
    }
  });

  std::vector<SelfDebugRecord> ok;
  nlohmann::json out_records = nlohmann::json::array();
  std::vector<std::vector<std::string>> rows{{"task_id", "variant", "feedback_index", "hidden_pass"}};
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& id = tasks[jobs[j].task].first->task_id;
    if (errors[j]) {
      report.messages.push_back(id + " variant " + std::to_string(jobs[j].variant) + ": " + *errors[j]);
      continue;
    }
    const auto& r = *records[j];
    out_records.push_back(r);
    rows.push_back({id, std::to_string(r.variant_index),
                    r.feedback_assertion ? std::to_string(r.feedback_assertion->input_index) : "-",
                    r.hidden_pass ? "yes" : "no"});
    ok.push_back(r);
  }
  auto rate = self_debug_rate(ok);
  nlohmann::json out{{"suite", ctx.suite.suite_id},
                     {"mode", ctx.record.manifest.value("mode", "")},
                     {"hidden_pass_pct", rate.total ? nlohmann::json(rounded_pct(rate.hits, rate.total))
                                                    : nlohmann::json(nullptr)},
                     {"hidden_pass", rate.hits},
                     {"variants", rate.total},
                     {"records", out_records},
                     {"messages", report.messages}};
  std::string table = render_table(rows);
  table += "\nself-debug pass@1 " + rate.pct() + " (" + std::to_string(rate.hits) + "/" +
           std::to_string(rate.total) + ")\n";
  write_json(ctx.out_dir / "self_debug.json", out);
  write_file_atomic(ctx.out_dir / "self_debug.txt", table);
  report.output = ctx.out_dir / "self_debug.json";
  report.provider_calls = gateway.provider_calls();
  report.cache_hits = gateway.cache_hits();
  if (ok.size() != jobs.size()) report.exit_code = provider_failure ? exit_codes::provider : exit_codes::partial;
  return report;
}

ReplayReport cmd_replay(const ReplayOptions& options) {
  ReplayReport report;
  auto original = load_record(options.record_dir);
  if (original.manifest.value("status", "") != "complete") {
    report.messages.push_back("record status is '" + original.manifest.value("status", "") +
                              "'; only completed tasks are replayed");
  }
  auto out_dir = options.out_dir.value_or(fs::path(options.record_dir.string() + "-replay"));
  if (fs::weakly_canonical(out_dir) == fs::weakly_canonical(options.record_dir)) {
    throw ConfigError("replay output must differ from the record being replayed");
  }

  RunConfig config = original.config;
  config.out_dir = out_dir.string();
  config.cache_dir = (options.record_dir / "exchanges").string();
  config.resume = false;
  if (!options.runner_command.empty()) config.runner_command = options.runner_command;

  TaskSuite suite = original.suite;
  auto store = RunStore::create(out_dir, config, suite, false);
  report.output = store.dir();

  GatewayOptions gateway_options;
  gateway_options.cache_dir = options.record_dir / "exchanges";
  gateway_options.cache_only = true;
  gateway_options.mirror_dir = store.exchanges_dir();
  Gateway gateway(std::make_shared<NoProvider>(), gateway_options);

  std::unique_ptr<Sandbox> sandbox;
  if (!config.runner_command.empty()) {
    sandbox = std::make_unique<Sandbox>(SandboxOptions{config.runner_command, config.workers, true, 16u << 20});
  }
  Pipeline pipeline(gateway, PromptLibrary::builtin(), sandbox.get(), config.mode, config.model_settings(),
                    config.max_refine, config.limits);

  std::vector<const Task*> tasks;
  for (const auto& task : suite.tasks) {
    auto it = original.tasks.find(task.task_id);
    if (it != original.tasks.end() && it->second.completed) tasks.push_back(&task);
  }
  std::vector<std::exception_ptr> failures(tasks.size());
  parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
    try {
      Transcript transcript;
      store.write_task(pipeline.run_task(*tasks[i], transcript));
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (auto& f : failures) {
    if (f) {
      store.finalize("partial");
      std::rethrow_exception(f);
    }
  }
  store.finalize(original.manifest.value("status", "complete"));

  for (auto it = original.tasks.begin(); it != original.tasks.end();) {
    it = it->second.completed ? std::next(it) : original.tasks.erase(it);
  }
  auto replayed = load_record(out_dir);
  report.differences = record_differences(canonical_view(original), canonical_view(replayed));
  report.identical = report.differences.empty();
  report.provider_calls = gateway.provider_calls();
  report.cache_hits = gateway.cache_hits();
  for (const auto& d : report.differences) report.messages.push_back("differs at " + d);
  if (!report.identical) report.exit_code = exit_codes::partial;
  return report;
}

}  // namespace oracle_forge
