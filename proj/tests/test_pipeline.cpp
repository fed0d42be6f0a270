#include <gtest/gtest.h>

#include "oracle_forge/errors.hpp"
#include "oracle_forge/pipeline.hpp"
#include "test_support.hpp"

using namespace oracle_forge;
using oracle_forge::testing::fixture;
using oracle_forge::testing::no_cache_options;
using oracle_forge::testing::scripted;
using oracle_forge::testing::stub_runner;
using oracle_forge::testing::stub_sandbox;

namespace {

const TaskSuite& suite3() {
  static const auto suite = load_suite(fixture("suite3.jsonl"));
  return suite;
}

std::string golden_name(std::string id) {
  for (auto& c : id) {
    if (c == '/') c = '_';
  }
  return "golden/" + id + ".oracles.json";
}

TaskRun run(Mode mode, const std::string& task_id, int max_refine = 5) {
  auto sandbox = stub_sandbox();
  Gateway gw(scripted("script3.json"), no_cache_options());
  Pipeline p(gw, PromptLibrary::builtin(), &sandbox, mode, {}, max_refine, ExecLimits{});
  Transcript tr;
  return p.run_task(*suite3().find(task_id), tr);
}

RunConfig valid_config() {
  RunConfig c;
  c.suite_path = "suite.jsonl";
  c.script_path = "script.json";
  c.runner_command = stub_runner();
  return c;
}

}  // namespace

TEST(Pipeline, FullModeMatchesGoldenOracles) {
  auto expected = nlohmann::json::parse(read_file(fixture("golden/suite3_expected.json")));
  for (const auto& task : suite3().tasks) {
    auto r = run(Mode::full, task.task_id);
    ASSERT_TRUE(r.completed) << task.task_id;
    nlohmann::json final_json = r.final_oracles;
    EXPECT_EQ(final_json.dump(2) + "\n", read_file(fixture(golden_name(task.task_id)))) << task.task_id;
    const auto& e = expected.at(task.task_id);
    EXPECT_EQ(r.deliberation_exchange_count(), e.at("deliberation_exchanges").get<std::size_t>()) << task.task_id;
    EXPECT_EQ(r.exchanges.size(), e.at("exchanges").get<std::size_t>()) << task.task_id;
    EXPECT_EQ(r.refinement->iterations.size(), e.at("refinement_iterations").get<std::size_t>()) << task.task_id;
    EXPECT_EQ(to_string(r.refinement->stop_reason), e.at("stop_reason").get<std::string>()) << task.task_id;
  }
}

TEST(Pipeline, CandidateRetryIsRecorded) {
  auto r = run(Mode::full, "fx/count_vowels");
  std::vector<std::string> tags;
  for (const auto& e : r.exchanges) tags.push_back(e.request.request_tag);
  EXPECT_EQ(tags[11], "candidate_code");
  EXPECT_EQ(tags[12], "candidate_code:retry");
  EXPECT_EQ(tags[13], "refinement:0");
  EXPECT_EQ(tags[14], "refinement:1");
}

TEST(Pipeline, DirectModeIsTentativeOnly) {
  auto r = run(Mode::direct, "fx/add");
  EXPECT_EQ(r.exchanges.size(), 1u);
  EXPECT_EQ(r.final_oracles, r.deliberation.tentative);
  EXPECT_FALSE(r.candidate);
  EXPECT_FALSE(r.refinement);
}

TEST(Pipeline, PlanningOnlyStopsAfterCurator) {
  auto r = run(Mode::planning_only, "fx/is_palindrome");
  EXPECT_EQ(r.exchanges.size(), 11u);
  EXPECT_EQ(r.final_oracles, r.deliberation.candidate);
  EXPECT_FALSE(r.initial_report);
}

TEST(Pipeline, RefinementOnlyValidatesTentative) {
  auto r = run(Mode::refinement_only, "fx/add", 0);
  ASSERT_EQ(r.exchanges.size(), 2u);
  EXPECT_EQ(r.exchanges[0].request.request_tag, "tentative");
  EXPECT_EQ(r.exchanges[1].request.request_tag, "candidate_code");
  ASSERT_TRUE(r.initial_report);
  EXPECT_FALSE(r.initial_report->all_pass);
  EXPECT_FALSE(r.initial_report->verdicts[4].passed());
  EXPECT_EQ(r.refinement->stop_reason, StopReason::iteration_cap);
}

TEST(Pipeline, ValidationModeNeedsSandbox) {
  Gateway gw(scripted("script3.json"), no_cache_options());
  EXPECT_THROW(Pipeline(gw, PromptLibrary::builtin(), nullptr, Mode::full, {}, 5, ExecLimits{}), ConfigError);
  EXPECT_NO_THROW(Pipeline(gw, PromptLibrary::builtin(), nullptr, Mode::planning_only, {}, 5, ExecLimits{}));
}

TEST(Pipeline, TaskRunJsonRoundTrip) {
  auto r = run(Mode::full, "fx/is_palindrome");
  nlohmann::json j = r;
  nlohmann::json again = j.get<TaskRun>();
  EXPECT_EQ(j, again);
}

TEST(Modes, NamesAndPhases) {
  for (auto m : {Mode::direct, Mode::planning_only, Mode::refinement_only, Mode::full}) {
    EXPECT_EQ(mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(mode_from_string("turbo"), ConfigError);
  EXPECT_FALSE(uses_deliberation(Mode::direct));
  EXPECT_FALSE(uses_validation(Mode::planning_only));
  EXPECT_TRUE(uses_deliberation(Mode::full));
  EXPECT_TRUE(uses_validation(Mode::refinement_only));
}

TEST(RunConfigCheck, RejectsInvalidSettings) {
  EXPECT_NO_THROW(valid_config().check());
  auto c = valid_config();
  c.max_refine = 11;
  EXPECT_THROW(c.check(), ConfigError);
  c = valid_config();
  c.max_refine = -1;
  EXPECT_THROW(c.check(), ConfigError);
  c = valid_config();
  c.temperature = 1.5;
  EXPECT_THROW(c.check(), ConfigError);
  c = valid_config();
  c.script_path.reset();
  EXPECT_THROW(c.check(), ConfigError);
  c = valid_config();
  c.provider = "carrier-pigeon";
  EXPECT_THROW(c.check(), ConfigError);
  c = valid_config();
  c.runner_command.clear();
  EXPECT_THROW(c.check(), ConfigError);
  c.mode = Mode::planning_only;
  EXPECT_NO_THROW(c.check());
}

TEST(RunConfigCheck, WarnsWhenRefineIgnored) {
  auto c = valid_config();
  c.mode = Mode::direct;
  c.max_refine = 3;
  c.max_refine_explicit = true;
  EXPECT_EQ(c.check().size(), 1u);
  c.max_refine_explicit = false;
  EXPECT_TRUE(c.check().empty());
}

TEST(RunConfigCheck, JsonRoundTrip) {
  auto c = valid_config();
  c.mode = Mode::refinement_only;
  c.max_refine = 7;
  nlohmann::json j = c;
  nlohmann::json again = j.get<RunConfig>();
  EXPECT_EQ(j, again);
}
