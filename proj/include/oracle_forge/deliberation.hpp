#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oracle_forge/gateway.hpp"
#include "oracle_forge/prompts.hpp"
#include "oracle_forge/task.hpp"

namespace oracle_forge {

// Request parameters shared by every agent call of a run.
struct ModelSettings {
  std::string provider_id = "scripted";
  std::string model_id = "scripted-model";
  double temperature = 0.0;
  int max_output_tokens = kDefaultMaxOutputTokens;

  ChatRequest request(const RenderedPrompt& prompt, std::string tag) const;
};

// Ordered record of a task's agent calls plus free-form diagnostics.
struct Transcript {
  std::vector<ChatExchange> exchanges;
  std::vector<std::string> diagnostics;

  void note(std::string_view stage, std::string_view message);
  void absorb(Transcript&& other);
};

struct PanelistRole {
  std::string_view role_id;
  std::string_view role_name;
  std::string_view role_focus;
};

// Fixed panel order: SE, ES, FV, AA.
inline constexpr std::array<PanelistRole, 4> kPanelistRoles = {{
    {"specification_expert", "Specification Expert",
     "Focuses on adherence to documented specifications and requirements."},
    {"edge_case_specialist", "Edge Case Specialist",
     "Focuses on boundary conditions, corner cases, and error scenarios."},
    {"functional_validator", "Functional Validator",
     "Focuses on core functionality and expected input-output relationships."},
    {"algorithmic_analyst", "Algorithmic Analyst",
     "Focuses on step-by-step algorithm execution and correctness."},
}};

struct PanelistReport {
  std::string role_id;
  std::string raw_reply;
  OracleSet proposed;
  std::vector<std::string> diagnostics;
};

struct InterpreterSummary {
  std::string role_id;
  std::string summary_text;
  OracleSet extracted;
};

struct DeliberationResult {
  OracleSet tentative;
  std::string requirements_text;
  std::vector<PanelistReport> reports;
  std::vector<InterpreterSummary> summaries;
  // Curator output; equals `tentative` in direct mode.
  OracleSet candidate;
  std::vector<ChatExchange> exchanges;
  std::vector<std::string> diagnostics;
  std::vector<std::string> notes;
};

struct DeliberationOptions {
  ModelSettings model;
  // Continue with three reports when exactly one panelist hits a ProviderError.
  bool degrade_on_panelist_failure = false;
  bool concurrent = true;
};

// Placeholder oracle set "assert f(<input>) == None" used to backfill the tentative stage.
OracleSet placeholder_oracles(const Task& task);

class Deliberator {
 public:
  Deliberator(Gateway& gateway, const PromptLibrary& prompts, DeliberationOptions options);

  OracleSet generate_tentative(const Task& task, Transcript& transcript) const;
  std::string extract_requirements(const Task& task, Transcript& transcript) const;
  std::vector<PanelistReport> run_panel(const Task& task, const OracleSet& tentative,
                                        const std::string& requirements_text, Transcript& transcript) const;
  InterpreterSummary interpret(const Task& task, const PanelistReport& report, Transcript& transcript) const;
  OracleSet curate(const Task& task, const OracleSet& tentative, const std::vector<InterpreterSummary>& summaries,
                   Transcript& transcript) const;

  // tentative -> requirements -> panel -> interpret x4 -> curate. Exchanges land in `transcript`
  // as they complete, so a caller still holds the partial trace when a stage throws.
  DeliberationResult deliberate(const Task& task, Transcript& transcript) const;
  // Direct Generation baseline: the tentative stage alone.
  DeliberationResult direct(const Task& task, Transcript& transcript) const;

  const DeliberationOptions& options() const noexcept { return options_; }

 private:
  ChatExchange call(TemplateId id, const Bindings& bindings, std::string tag, Transcript& transcript) const;

  Gateway& gateway_;
  const PromptLibrary& prompts_;
  DeliberationOptions options_;
};

void to_json(nlohmann::json& j, const PanelistReport& r);
void from_json(const nlohmann::json& j, PanelistReport& r);
void to_json(nlohmann::json& j, const InterpreterSummary& s);
void from_json(const nlohmann::json& j, InterpreterSummary& s);
void to_json(nlohmann::json& j, const DeliberationResult& d);
void from_json(const nlohmann::json& j, DeliberationResult& d);

}  // namespace oracle_forge
