#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oracle_forge/deliberation.hpp"
#include "oracle_forge/sandbox.hpp"

namespace oracle_forge {

inline constexpr int kDefaultRefinementIterations = 5;
inline constexpr int kMaxRefinementIterations = 10;
inline constexpr std::size_t kMaxPassedExamples = 5;

enum class StopReason { all_pass, iteration_cap, candidate_unavailable };

std::string_view to_string(StopReason reason);
StopReason stop_reason_from_string(std::string_view name);

struct RefinementIteration {
  std::size_t iteration_index = 0;
  std::vector<std::size_t> failed_before;
  // The assertions written into failed slots during this iteration.
  std::vector<Assertion> repaired;
  ValidationReport report_after;
  std::vector<std::string> diagnostics;
};

struct RefinementTrace {
  std::vector<RefinementIteration> iterations;
  StopReason stop_reason = StopReason::all_pass;
};

// Re-validates a full oracle set against the candidate. The sandbox supplies the production one.
using Validator = std::function<ValidationReport(const CandidateCode&, const OracleSet&)>;

Validator sandbox_validator(const Sandbox& sandbox, ExecLimits limits);

std::string format_failed_oracles(const std::vector<FailedOracle>& failed);
std::string format_passed_examples(const std::vector<Assertion>& passed);

// The iteration note and the fifth consideration appear only from the second round on,
// numbered 1-based.
RenderedPrompt build_refinement_prompt(const PromptLibrary& prompts, const Task& task,
                                       const CandidateCode& candidate, const std::vector<FailedOracle>& failed,
                                       const std::vector<Assertion>& passed_examples, std::size_t iteration);

struct RefineOutcome {
  OracleSet oracles;
  std::vector<Assertion> repaired;
  std::vector<std::string> diagnostics;
};

class Refiner {
 public:
  Refiner(Gateway& gateway, const PromptLibrary& prompts, ModelSettings model, Validator validator);

  // One batched repair call; reply line i lands on the i-th failed index (ascending).
  RefineOutcome refine_once(const Task& task, const CandidateCode& candidate, const OracleSet& oracles,
                            const ValidationReport& report, std::size_t iteration, Transcript& transcript) const;

  // refine -> validate until everything passes or `max_iterations` rounds are spent.
  std::pair<OracleSet, RefinementTrace> run_loop(const Task& task, const std::optional<CandidateCode>& candidate,
                                                 const OracleSet& oracles, const ValidationReport& initial,
                                                 int max_iterations, Transcript& transcript) const;

 private:
  Gateway& gateway_;
  const PromptLibrary& prompts_;
  ModelSettings model_;
  Validator validator_;
};

void to_json(nlohmann::json& j, const RefinementIteration& it);
void from_json(const nlohmann::json& j, RefinementIteration& it);
void to_json(nlohmann::json& j, const RefinementTrace& t);
void from_json(const nlohmann::json& j, RefinementTrace& t);

}  // namespace oracle_forge
