#include "oracle_forge/refinement.hpp"

#include <algorithm>

namespace oracle_forge {

namespace {

constexpr std::pair<StopReason, std::string_view> kStopNames[] = {
    {StopReason::all_pass, "all_pass"},
    {StopReason::iteration_cap, "iteration_cap"},
    {StopReason::candidate_unavailable, "candidate_unavailable"},
};

// Flags a repair that names another failed slot's call but not its own.
std::optional<std::string> suspicious_mapping(const Task& task, const std::vector<FailedOracle>& failed,
                                              std::size_t slot, const std::string& repair) {
  auto own = call_expression(task.function_name, task.test_inputs[failed[slot].input_index]);
  if (repair.find(own) != std::string::npos) return std::nullopt;
  for (std::size_t k = 0; k < failed.size(); ++k) {
    if (k == slot) continue;
    auto other = call_expression(task.function_name, task.test_inputs[failed[k].input_index]);
    if (repair.find(other) != std::string::npos) {
      return "suspicious_mapping(index=" + std::to_string(failed[slot].input_index) +
             ", mentions input of index " + std::to_string(failed[k].input_index) + ")";
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(StopReason reason) {
  for (const auto& [r, name] : kStopNames) {
    if (r == reason) return name;
  }
  return "unknown";
}

StopReason stop_reason_from_string(std::string_view name) {
  for (const auto& [r, n] : kStopNames) {
    if (n == name) return r;
  }
  throw Error("unknown stop reason: " + std::string(name));
}

Validator sandbox_validator(const Sandbox& sandbox, ExecLimits limits) {
  return [&sandbox, limits](const CandidateCode& candidate, const OracleSet& oracles) {
    return sandbox.validate(candidate, oracles, limits);
  };
}

std::string format_failed_oracles(const std::vector<FailedOracle>& failed) {
  std::string out;
  for (std::size_t i = 0; i < failed.size(); ++i) {
    const auto& f = failed[i];
    if (i) out += "\n\n";
    out += std::to_string(i + 1) + ". " + f.assertion.source_text;
    out += "\n   Status: " + std::string(to_string(f.verdict.status));
    std::string error = f.verdict.error_type.value_or("");
    if (f.verdict.error_message && !f.verdict.error_message->empty()) {
      error += error.empty() ? *f.verdict.error_message : ": " + *f.verdict.error_message;
    }
    if (!error.empty()) out += "\n   Error: " + error;
  }
  return out;
}

std::string format_passed_examples(const std::vector<Assertion>& passed) {
  if (passed.empty()) return {};
  std::string out = "Passing Oracles (for reference):";
  for (const auto& a : passed) out += "\n" + a.source_text;
  return out;
}

RenderedPrompt build_refinement_prompt(const PromptLibrary& prompts, const Task& task,
                                       const CandidateCode& candidate, const std::vector<FailedOracle>& failed,
                                       const std::vector<Assertion>& passed_examples, std::size_t iteration) {
  std::vector<Assertion> examples(passed_examples.begin(),
                                  passed_examples.begin() +
                                      static_cast<std::ptrdiff_t>(std::min(passed_examples.size(), kMaxPassedExamples)));
  const auto display = std::to_string(iteration + 1);
  return prompts.render(
      TemplateId::refinement,
      {{"iteration_note", iteration > 0 ? "This is refinement iteration " + display +
                                              "; the fixes proposed earlier still failed validation."
                                        : std::string{}},
       {"iteration_clause",
        iteration > 0 ? "5. Why the previous iteration's fixes didn't work (iteration " + display + ")" : std::string{}},
       {"task_description", task.description},
       {"candidate_code", candidate.source_text},
       {"passed_examples", format_passed_examples(examples)},
       {"failed_oracles_formatted", format_failed_oracles(failed)},
       {"len", std::to_string(failed.size())}});
}

Refiner::Refiner(Gateway& gateway, const PromptLibrary& prompts, ModelSettings model, Validator validator)
    : gateway_(gateway), prompts_(prompts), model_(std::move(model)), validator_(std::move(validator)) {}

RefineOutcome Refiner::refine_once(const Task& task, const CandidateCode& candidate, const OracleSet& oracles,
                                   const ValidationReport& report, std::size_t iteration,
                                   Transcript& transcript) const {
  auto failed = failed_subset(report, oracles);
  RefineOutcome outcome{oracles, {}, {}};
  if (failed.empty()) return outcome;

  std::vector<Assertion> passed;
  for (const auto& v : report.verdicts) {
    if (v.passed() && v.input_index < oracles.assertions.size()) passed.push_back(oracles.assertions[v.input_index]);
  }
  auto prompt = build_refinement_prompt(prompts_, task, candidate, failed, passed, iteration);
  auto exchange = gateway_.complete(model_.request(prompt, "refinement:" + std::to_string(iteration)));
  transcript.exchanges.push_back(exchange);

  auto extraction = extract_assertions(exchange.reply_text, failed.size());
  outcome.diagnostics = extraction.diagnostics;
  const std::string origin = "refined:" + std::to_string(iteration);
  for (std::size_t k = 0; k < failed.size(); ++k) {
    auto index = failed[k].input_index;
    if (k >= extraction.lines.size()) {
      outcome.diagnostics.push_back("kept_previous(index=" + std::to_string(index) + ")");
      continue;
    }
    if (auto warn = suspicious_mapping(task, failed, k, extraction.lines[k])) outcome.diagnostics.push_back(*warn);
    Assertion repaired{extraction.lines[k], index, origin};
    outcome.oracles.assertions[index] = repaired;
    outcome.repaired.push_back(std::move(repaired));
  }
  for (const auto& d : outcome.diagnostics) transcript.note("refinement:" + std::to_string(iteration), d);
  return outcome;
}

std::pair<OracleSet, RefinementTrace> Refiner::run_loop(const Task& task, const std::optional<CandidateCode>& candidate,
                                                        const OracleSet& oracles, const ValidationReport& initial,
                                                        int max_iterations, Transcript& transcript) const {
  if (max_iterations < 0 || max_iterations > kMaxRefinementIterations) {
    throw ConfigError("refinement iterations must lie in 0.." + std::to_string(kMaxRefinementIterations));
  }
  RefinementTrace trace;
  if (!candidate) {
    trace.stop_reason = StopReason::candidate_unavailable;
    return {oracles, std::move(trace)};
  }
  OracleSet current = oracles;
  ValidationReport report = initial;
  for (int it = 0; it < max_iterations && !report.all_pass; ++it) {
    auto iteration = static_cast<std::size_t>(it);
    RefinementIteration step;
    step.iteration_index = iteration;
    for (const auto& f : failed_subset(report, current)) step.failed_before.push_back(f.input_index);
    auto outcome = refine_once(task, *candidate, current, report, iteration, transcript);
    current = std::move(outcome.oracles);
    report = validator_(*candidate, current);
    step.repaired = std::move(outcome.repaired);
    step.diagnostics = std::move(outcome.diagnostics);
    step.report_after = report;
    trace.iterations.push_back(std::move(step));
  }
  trace.stop_reason = report.all_pass ? StopReason::all_pass : StopReason::iteration_cap;
  return {std::move(current), std::move(trace)};
}

void to_json(nlohmann::json& j, const RefinementIteration& it) {
  j = nlohmann::json{{"iteration_index", it.iteration_index},
                     {"failed_before", it.failed_before},
                     {"repaired", it.repaired},
                     {"report_after", it.report_after},
                     {"diagnostics", it.diagnostics}};
}

void from_json(const nlohmann::json& j, RefinementIteration& it) {
  it.iteration_index = j.at("iteration_index").get<std::size_t>();
  it.failed_before = j.at("failed_before").get<std::vector<std::size_t>>();
  it.repaired = j.at("repaired").get<std::vector<Assertion>>();
  it.report_after = j.at("report_after").get<ValidationReport>();
  it.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
}

void to_json(nlohmann::json& j, const RefinementTrace& t) {
  j = nlohmann::json{{"iterations", t.iterations}, {"stop_reason", to_string(t.stop_reason)}};
}

void from_json(const nlohmann::json& j, RefinementTrace& t) {
  t.iterations = j.at("iterations").get<std::vector<RefinementIteration>>();
  t.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
}

}  // namespace oracle_forge
