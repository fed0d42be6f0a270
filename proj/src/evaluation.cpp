#include "oracle_forge/evaluation.hpp"

#include <algorithm>
#include <cstdio>

namespace oracle_forge {

AccuracyRecord accuracy_from_verdicts(std::string task_id, const std::vector<Verdict>& verdicts) {
  AccuracyRecord record;
  record.task_id = std::move(task_id);
  record.verdicts = verdicts;
  record.per_assertion_correct.reserve(verdicts.size());
  for (const auto& v : verdicts) record.per_assertion_correct.push_back(v.passed());
  record.task_correct = std::all_of(record.per_assertion_correct.begin(), record.per_assertion_correct.end(),
                                    [](bool ok) { return ok; });
  return record;
}

AccuracyRecord score_oracles(const Sandbox& sandbox, const OracleSet& oracles, const Task& task,
                             const ExecLimits& limits) {
  if (!task.canonical_solution) throw MissingCanonicalError(task.task_id);
  auto verdicts = sandbox.execute(*task.canonical_solution, task.function_name, oracles.lines(), limits);
  return accuracy_from_verdicts(task.task_id, verdicts);
}

MetricsSummary aggregate(const std::vector<AccuracyRecord>& records) {
  if (records.empty()) throw EmptyInputError("no accuracy records to aggregate");
  MetricsSummary m;
  m.n_tasks = records.size();
  for (const auto& r : records) {
    if (r.task_correct) ++m.correct_tasks;
    m.n_assertions += r.per_assertion_correct.size();
    m.correct_assertions += static_cast<std::size_t>(
        std::count(r.per_assertion_correct.begin(), r.per_assertion_correct.end(), true));
  }
  m.task_level_pct = 100.0 * static_cast<double>(m.correct_tasks) / static_cast<double>(m.n_tasks);
  m.test_level_pct = m.n_assertions
                         ? 100.0 * static_cast<double>(m.correct_assertions) / static_cast<double>(m.n_assertions)
                         : 0.0;
  return m;
}

std::string format_pct(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0) return "n/a";
  // Hundredths of a percent, rounded half-up: floor(10000 * n / d + 1/2).
  std::uint64_t hundredths = (20000 * numerator + denominator) / (2 * denominator);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(hundredths / 100),
                static_cast<unsigned long long>(hundredths % 100));
  return buf;
}

OracleSet correct_subset(const OracleSet& oracles, const AccuracyRecord& record) {
  OracleSet out{oracles.task_id, {}};
  for (const auto& a : oracles.assertions) {
    if (a.input_index < record.per_assertion_correct.size() && record.per_assertion_correct[a.input_index]) {
      out.assertions.push_back(a);
    }
  }
  return out;
}

BugDetectionResult bug_detection(const Sandbox& sandbox, const OracleSet& oracles, const AccuracyRecord& record,
                                 const Task& task, const ExecLimits& limits) {
  if (!task.buggy_variants || task.buggy_variants->empty()) throw NoBuggyVariantsError(task.task_id);
  BugDetectionResult result;
  auto correct = correct_subset(oracles, record);
  if (correct.assertions.empty()) {
    result.excluded_variants = task.buggy_variants->size();
    result.diagnostics.push_back("task " + task.task_id + " has no verified-correct oracle; " +
                                 std::to_string(result.excluded_variants) + " variant(s) excluded");
    return result;
  }
  for (std::size_t v = 0; v < task.buggy_variants->size(); ++v) {
    auto verdicts = sandbox.execute((*task.buggy_variants)[v], task.function_name, correct.lines(), limits);
    BugDetectionRecord rec{task.task_id, v, false, {}};
    for (std::size_t k = 0; k < verdicts.size(); ++k) {
      if (!verdicts[k].passed()) rec.triggering_indices.push_back(correct.assertions[k].input_index);
    }
    rec.detected = !rec.triggering_indices.empty();
    result.records.push_back(std::move(rec));
  }
  return result;
}

RateSummary detection_rate(const std::vector<BugDetectionResult>& results) {
  RateSummary s;
  for (const auto& r : results) {
    for (const auto& rec : r.records) {
      ++s.total;
      if (rec.detected) ++s.hits;
    }
  }
  return s;
}

SelfDebugRecord self_debug(const SelfDebugContext& ctx, const Task& task, std::size_t variant_index,
                           const OracleSet& oracles, const AccuracyRecord* record, Transcript& transcript) {
  if (!task.hidden_tests || task.hidden_tests->empty()) {
    throw ConfigError("task " + task.task_id + " has no hidden_tests");
  }
  if (!task.buggy_variants || variant_index >= task.buggy_variants->size()) throw NoBuggyVariantsError(task.task_id);
  const auto& buggy = (*task.buggy_variants)[variant_index];

  SelfDebugRecord rec;
  rec.task_id = task.task_id;
  rec.variant_index = variant_index;

  auto verdicts = ctx.sandbox.execute(buggy, task.function_name, oracles.lines(), ctx.limits);
  auto failing = std::find_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return !v.passed(); });
  if (failing == verdicts.end()) {
    rec.diagnostics.push_back(NoFailingOracleError("no oracle fails on variant " + std::to_string(variant_index) +
                                                   " of " + task.task_id)
                                  .what());
    rec.repaired_source = buggy;
  } else {
    const auto& feedback = oracles.assertions[failing->input_index];
    rec.feedback_assertion = feedback;
    rec.feedback_verdict = *failing;
    if (record && feedback.input_index < record->per_assertion_correct.size()) {
      rec.feedback_correct = record->per_assertion_correct[feedback.input_index];
    }
    std::string error = failing->error_type.value_or(std::string(to_string(failing->status)));
    if (failing->error_message && !failing->error_message->empty()) error += ": " + *failing->error_message;
    auto prompt = ctx.prompts.render(TemplateId::self_debug_feedback, {{"task_description", task.description},
                                                                        {"function_name", task.function_name},
                                                                        {"buggy_code", buggy},
                                                                        {"failing_assertion", feedback.source_text},
                                                                        {"error_message", error}});
    auto exchange = ctx.gateway.complete(ctx.model.request(prompt, "self_debug"));
    transcript.exchanges.push_back(exchange);
    try {
      rec.repaired_source = extract_code_block(exchange.reply_text);
    } catch (const NoCodeFoundError& e) {
      rec.diagnostics.push_back(e.what());
      rec.hidden_pass = false;
      return rec;
    }
  }
  auto hidden = ctx.sandbox.execute(rec.repaired_source, task.function_name, *task.hidden_tests, ctx.limits);
  rec.hidden_pass = std::all_of(hidden.begin(), hidden.end(), [](const Verdict& v) { return v.passed(); });
  return rec;
}

RateSummary self_debug_rate(const std::vector<SelfDebugRecord>& records) {
  RateSummary s;
  s.total = records.size();
  s.hits = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const SelfDebugRecord& r) { return r.hidden_pass; }));
  return s;
}

void to_json(nlohmann::json& j, const AccuracyRecord& r) {
  j = nlohmann::json{{"task_id", r.task_id},
                     {"per_assertion_correct", r.per_assertion_correct},
                     {"task_correct", r.task_correct},
                     {"verdicts", r.verdicts}};
}

void from_json(const nlohmann::json& j, AccuracyRecord& r) {
  r.task_id = j.at("task_id").get<std::string>();
  r.per_assertion_correct = j.at("per_assertion_correct").get<std::vector<bool>>();
  r.task_correct = j.at("task_correct").get<bool>();
  r.verdicts = j.value("verdicts", std::vector<Verdict>{});
}

void to_json(nlohmann::json& j, const MetricsSummary& m) {
  j = nlohmann::json{{"task_level_pct", m.task_level_pct},
                     {"test_level_pct", m.test_level_pct},
                     {"n_tasks", m.n_tasks},
                     {"n_assertions", m.n_assertions},
                     {"correct_tasks", m.correct_tasks},
                     {"correct_assertions", m.correct_assertions}};
}

void to_json(nlohmann::json& j, const BugDetectionRecord& r) {
  j = nlohmann::json{{"task_id", r.task_id},
                     {"variant_index", r.variant_index},
                     {"detected", r.detected},
                     {"triggering_indices", r.triggering_indices}};
}

void to_json(nlohmann::json& j, const SelfDebugRecord& r) {
  j = nlohmann::json{{"task_id", r.task_id},
                     {"variant_index", r.variant_index},
                     {"feedback_assertion", r.feedback_assertion ? nlohmann::json(*r.feedback_assertion) : nlohmann::json(nullptr)},
                     {"feedback_verdict", r.feedback_verdict ? nlohmann::json(*r.feedback_verdict) : nlohmann::json(nullptr)},
                     {"feedback_correct", r.feedback_correct ? nlohmann::json(*r.feedback_correct) : nlohmann::json(nullptr)},
                     {"repaired_source", r.repaired_source},
                     {"hidden_pass", r.hidden_pass},
                     {"diagnostics", r.diagnostics}};
}

}  // namespace oracle_forge
