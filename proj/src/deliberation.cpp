#include "oracle_forge/deliberation.hpp"

#include <future>
#include <optional>

namespace oracle_forge {

namespace {

void note_all(Transcript& transcript, std::string_view stage, const std::vector<std::string>& diagnostics) {
  for (const auto& d : diagnostics) transcript.note(stage, d);
}

// Runs `fn(i)` for i in [0, n), concurrently when asked; results keep index order.
template <typename Result, typename Fn>
std::vector<std::optional<Result>> run_indexed(std::size_t n, bool concurrent, Fn fn,
                                               std::vector<std::exception_ptr>& errors) {
  std::vector<std::optional<Result>> results(n);
  errors.assign(n, nullptr);
  if (!concurrent) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        results[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    return results;
  }
  std::vector<std::future<Result>> futures;
  futures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, fn, i));
  for (std::size_t i = 0; i < n; ++i) {
    try {
      results[i].emplace(futures[i].get());
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  return results;
}

}  // namespace

ChatRequest ModelSettings::request(const RenderedPrompt& prompt, std::string tag) const {
  ChatRequest r;
  r.provider_id = provider_id;
  r.model_id = model_id;
  r.system_text = prompt.system_text;
  r.user_text = prompt.user_text;
  r.temperature = temperature;
  r.max_output_tokens = max_output_tokens;
  r.request_tag = std::move(tag);
  return r;
}

void Transcript::note(std::string_view stage, std::string_view message) {
  diagnostics.push_back(std::string(stage) + ": " + std::string(message));
}

void Transcript::absorb(Transcript&& other) {
  for (auto& e : other.exchanges) exchanges.push_back(std::move(e));
  for (auto& d : other.diagnostics) diagnostics.push_back(std::move(d));
  other.exchanges.clear();
  other.diagnostics.clear();
}

OracleSet placeholder_oracles(const Task& task) {
  OracleSet set{task.task_id, {}};
  for (std::size_t i = 0; i < task.test_inputs.size(); ++i) {
    set.assertions.push_back(
        {"assert " + call_expression(task.function_name, task.test_inputs[i]) + " == None", i, "placeholder"});
  }
  return set;
}

Deliberator::Deliberator(Gateway& gateway, const PromptLibrary& prompts, DeliberationOptions options)
    : gateway_(gateway), prompts_(prompts), options_(std::move(options)) {}

ChatExchange Deliberator::call(TemplateId id, const Bindings& bindings, std::string tag,
                               Transcript& transcript) const {
  auto prompt = prompts_.render(id, bindings);
  auto exchange = gateway_.complete(options_.model.request(prompt, std::move(tag)));
  transcript.exchanges.push_back(exchange);
  return exchange;
}

OracleSet Deliberator::generate_tentative(const Task& task, Transcript& transcript) const {
  const auto n = task.input_count();
  auto exchange = call(TemplateId::tentative,
                       {{"task_description", task.description},
                        {"test_inputs_formatted", format_test_inputs(task.function_name, task.test_inputs)},
                        {"len", std::to_string(n)}},
                       "tentative", transcript);
  auto extraction = extract_assertions(exchange.reply_text, n);
  note_all(transcript, "tentative", extraction.diagnostics);
  auto aligned = align(extraction.lines, placeholder_oracles(task), n, "tentative");
  note_all(transcript, "tentative", aligned.diagnostics);
  return std::move(aligned.oracles);
}

std::string Deliberator::extract_requirements(const Task& task, Transcript& transcript) const {
  auto exchange = call(TemplateId::requirements, {{"task_description", task.description}}, "requirements",
                       transcript);
  if (exchange.reply_text.empty()) transcript.note("requirements", "empty requirements reply");
  return exchange.reply_text;
}

std::vector<PanelistReport> Deliberator::run_panel(const Task& task, const OracleSet& tentative,
                                                   const std::string& requirements_text,
                                                   Transcript& transcript) const {
  const auto n = task.input_count();
  const auto inputs = format_test_inputs(task.function_name, task.test_inputs);
  const auto tentative_text = format_assertions(tentative);

  struct Outcome {
    PanelistReport report;
    Transcript local;
  };
  auto run_role = [&](std::size_t i) {
    const auto& role = kPanelistRoles[i];
    Outcome out;
    auto exchange = call(TemplateId::panelist,
                         {{"role_name", std::string(role.role_name)},
                          {"role_focus", std::string(role.role_focus)},
                          {"task_description", task.description},
                          {"requirements", requirements_text},
                          {"tentative_formatted", tentative_text},
                          {"test_inputs_formatted", inputs},
                          {"len", std::to_string(n)}},
                         "panelist:" + std::string(role.role_id), out.local);
    auto extraction = extract_assertions(exchange.reply_text, n);
    auto aligned = align(extraction.lines, tentative, n, "panelist:" + std::string(role.role_id));
    out.report.role_id = role.role_id;
    out.report.raw_reply = exchange.reply_text;
    out.report.proposed = std::move(aligned.oracles);
    out.report.diagnostics = extraction.diagnostics;
    out.report.diagnostics.insert(out.report.diagnostics.end(), aligned.diagnostics.begin(),
                                  aligned.diagnostics.end());
    note_all(out.local, "panelist:" + std::string(role.role_id), out.report.diagnostics);
    return out;
  };

  std::vector<std::exception_ptr> errors;
  auto outcomes = run_indexed<Outcome>(kPanelistRoles.size(), options_.concurrent, run_role, errors);

  std::size_t failures = 0;
  std::exception_ptr first_hard;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    ++failures;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ProviderError&) {
      if (!options_.degrade_on_panelist_failure && !first_hard) first_hard = errors[i];
    } catch (...) {
      if (!first_hard) first_hard = errors[i];
    }
  }
  if (!first_hard && failures > 1) {
    for (auto& e : errors) {
      if (e) first_hard = e;
    }
  }

  std::vector<PanelistReport> reports;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i]) {
      transcript.absorb(std::move(outcomes[i]->local));
      reports.push_back(std::move(outcomes[i]->report));
    } else if (!first_hard) {
      transcript.note("panel", "panelist " + std::string(kPanelistRoles[i].role_id) +
                                   " failed; continuing with remaining reports");
    }
  }
  if (first_hard) std::rethrow_exception(first_hard);
  return reports;
}

InterpreterSummary Deliberator::interpret(const Task& task, const PanelistReport& report,
                                          Transcript& transcript) const {
  const auto n = task.input_count();
  auto exchange = call(TemplateId::interpreter,
                       {{"panelist_output", report.raw_reply}, {"test_code_formatted", format_assertions(report.proposed)}},
                       "interpreter:" + report.role_id, transcript);
  auto extraction = extract_assertions(exchange.reply_text, n);
  auto aligned = align(extraction.lines, report.proposed, n, "panelist:" + report.role_id);
  note_all(transcript, "interpreter:" + report.role_id, extraction.diagnostics);
  note_all(transcript, "interpreter:" + report.role_id, aligned.diagnostics);
  return {report.role_id, exchange.reply_text, std::move(aligned.oracles)};
}

OracleSet Deliberator::curate(const Task& task, const OracleSet& tentative,
                              const std::vector<InterpreterSummary>& summaries, Transcript& transcript) const {
  const auto n = task.input_count();
  std::string discussion;
  for (const auto& role : kPanelistRoles) {
    for (const auto& s : summaries) {
      if (s.role_id != role.role_id) continue;
      if (!discussion.empty()) discussion += "\n\n";
      discussion += "### " + std::string(role.role_name) + "\n" + s.summary_text;
    }
  }
  auto exchange = call(TemplateId::curator,
                       {{"task_description", task.description},
                        {"tentative_formatted", format_assertions(tentative)},
                        {"test_inputs_formatted", format_test_inputs(task.function_name, task.test_inputs)},
                        {"panel_discussion", discussion},
                        {"len", std::to_string(n)}},
                       "curator", transcript);
  auto extraction = extract_assertions(exchange.reply_text, n);
  auto aligned = align(extraction.lines, tentative, n, "curator");
  note_all(transcript, "curator", extraction.diagnostics);
  note_all(transcript, "curator", aligned.diagnostics);
  return std::move(aligned.oracles);
}

DeliberationResult Deliberator::deliberate(const Task& task, Transcript& transcript) const {
  const auto first_exchange = transcript.exchanges.size();
  const auto first_diagnostic = transcript.diagnostics.size();
  DeliberationResult result;
  result.tentative = generate_tentative(task, transcript);
  result.requirements_text = extract_requirements(task, transcript);
  result.reports = run_panel(task, result.tentative, result.requirements_text, transcript);

  struct Outcome {
    InterpreterSummary summary;
    Transcript local;
  };
  std::vector<std::exception_ptr> errors;
  auto outcomes = run_indexed<Outcome>(
      result.reports.size(), options_.concurrent,
      [&](std::size_t i) {
        Outcome out;
        out.summary = interpret(task, result.reports[i], out.local);
        return out;
      },
      errors);
  for (auto& o : outcomes) {
    if (o) transcript.absorb(std::move(o->local));
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& o : outcomes) result.summaries.push_back(std::move(o->summary));

  result.candidate = curate(task, result.tentative, result.summaries, transcript);
  if (result.summaries.size() != 3) {
    result.notes.push_back("curator prompt text names three team members; " +
                           std::to_string(result.summaries.size()) + " reports were supplied");
  }
  result.exchanges.assign(transcript.exchanges.begin() + static_cast<std::ptrdiff_t>(first_exchange),
                          transcript.exchanges.end());
  result.diagnostics.assign(transcript.diagnostics.begin() + static_cast<std::ptrdiff_t>(first_diagnostic),
                            transcript.diagnostics.end());
  return result;
}

DeliberationResult Deliberator::direct(const Task& task, Transcript& transcript) const {
  const auto first_exchange = transcript.exchanges.size();
  const auto first_diagnostic = transcript.diagnostics.size();
  DeliberationResult result;
  result.tentative = generate_tentative(task, transcript);
  result.candidate = result.tentative;
  result.exchanges.assign(transcript.exchanges.begin() + static_cast<std::ptrdiff_t>(first_exchange),
                          transcript.exchanges.end());
  result.diagnostics.assign(transcript.diagnostics.begin() + static_cast<std::ptrdiff_t>(first_diagnostic),
                            transcript.diagnostics.end());
  return result;
}

void to_json(nlohmann::json& j, const PanelistReport& r) {
  j = nlohmann::json{
      {"role_id", r.role_id}, {"raw_reply", r.raw_reply}, {"proposed", r.proposed}, {"diagnostics", r.diagnostics}};
}

void from_json(const nlohmann::json& j, PanelistReport& r) {
  r.role_id = j.at("role_id").get<std::string>();
  r.raw_reply = j.at("raw_reply").get<std::string>();
  r.proposed = j.at("proposed").get<OracleSet>();
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
}

void to_json(nlohmann::json& j, const InterpreterSummary& s) {
  j = nlohmann::json{{"role_id", s.role_id}, {"summary_text", s.summary_text}, {"extracted", s.extracted}};
}

void from_json(const nlohmann::json& j, InterpreterSummary& s) {
  s.role_id = j.at("role_id").get<std::string>();
  s.summary_text = j.at("summary_text").get<std::string>();
  s.extracted = j.at("extracted").get<OracleSet>();
}

void to_json(nlohmann::json& j, const DeliberationResult& d) {
  j = nlohmann::json{{"tentative", d.tentative},
                     {"requirements_text", d.requirements_text},
                     {"reports", d.reports},
                     {"summaries", d.summaries},
                     {"candidate", d.candidate},
                     {"exchanges", d.exchanges},
                     {"diagnostics", d.diagnostics},
                     {"notes", d.notes}};
}

void from_json(const nlohmann::json& j, DeliberationResult& d) {
  d.tentative = j.at("tentative").get<OracleSet>();
  d.requirements_text = j.at("requirements_text").get<std::string>();
  d.reports = j.at("reports").get<std::vector<PanelistReport>>();
  d.summaries = j.at("summaries").get<std::vector<InterpreterSummary>>();
  d.candidate = j.at("candidate").get<OracleSet>();
  d.exchanges = j.at("exchanges").get<std::vector<ChatExchange>>();
  d.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  d.notes = j.at("notes").get<std::vector<std::string>>();
}

}  // namespace oracle_forge
