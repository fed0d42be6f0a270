#include <gtest/gtest.h>

#include "oracle_forge/commands.hpp"
#include "test_support.hpp"

using namespace oracle_forge;
using oracle_forge::testing::CountingProvider;
using oracle_forge::testing::fixture;
using oracle_forge::testing::ScratchDir;
using oracle_forge::testing::scripted;
using oracle_forge::testing::stub_runner;

namespace fs = std::filesystem;

namespace {

RunConfig config_for(const ScratchDir& dir, const std::string& suite, const std::string& script, Mode mode) {
  RunConfig c;
  c.suite_path = fixture(suite).string();
  c.script_path = fixture(script).string();
  c.mode = mode;
  c.runner_command = stub_runner();
  c.cache_dir = (dir / "cache").string();
  c.out_dir = (dir / "run").string();
  c.workers = 2;
  return c;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_file(p)); }

}  // namespace

TEST(ExitCodes, MapErrorsToDocumentedCodes) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), exit_codes::config);
  EXPECT_EQ(exit_code_for(FormatError(3, "x")), exit_codes::config);
  EXPECT_EQ(exit_code_for(SchemaVersionError("x")), exit_codes::config);
  EXPECT_EQ(exit_code_for(ProviderError("x")), exit_codes::provider);
  EXPECT_EQ(exit_code_for(CacheMissError("k", "t")), exit_codes::provider);
  EXPECT_EQ(exit_code_for(BudgetError("x")), exit_codes::provider);
  EXPECT_EQ(exit_code_for(ProtocolError("x", "")), exit_codes::partial);
}

TEST(MakeProvider, LiveProviderNeedsKey) {
  RunConfig c;
  c.provider = "openai";
  ::unsetenv(std::string(kApiKeyEnv).c_str());
  EXPECT_THROW(make_provider(c), ConfigError);
  ::setenv(std::string(kApiKeyEnv).c_str(), "sk-test", 1);
  EXPECT_TRUE(make_provider(c)->is_live());
  ::unsetenv(std::string(kApiKeyEnv).c_str());
}

TEST(Generate, WritesCompleteRecord) {
  ScratchDir dir;
  auto report = cmd_generate(config_for(dir, "suite3.jsonl", "script3.json", Mode::full));
  EXPECT_EQ(report.exit_code, exit_codes::ok);
  auto manifest = read_json(dir / "run" / "record.json");
  EXPECT_EQ(manifest.at("status"), "complete");
  EXPECT_EQ(manifest.at("schema_version"), std::string(kRecordSchemaVersion));
  EXPECT_EQ(manifest.at("task_ids"), nlohmann::json({"fx/add", "fx/is_palindrome", "fx/count_vowels"}));
  EXPECT_TRUE(fs::exists(dir / "run" / "tasks" / "fx_add.json"));
  EXPECT_EQ(report.provider_calls, 12u + 13u + 15u);
  auto record = load_record(dir / "run");
  EXPECT_EQ(record.tasks.size(), 3u);
  for (const auto& [id, run] : record.tasks) {
    for (const auto& e : run.exchanges) EXPECT_TRUE(fs::exists(dir / "run" / "exchanges" / (e.cache_key + ".txt")));
  }
}

TEST(Generate, WarmCacheAvoidsProvider) {
  ScratchDir dir;
  auto config = config_for(dir, "suite3.jsonl", "script3.json", Mode::planning_only);
  auto first = cmd_generate(config);
  auto counting = std::make_shared<CountingProvider>(scripted("script3.json"));
  auto second = cmd_generate(config, counting);
  EXPECT_EQ(counting->sends.load(), 0u);
  EXPECT_EQ(second.cache_hits, first.provider_calls);
}

TEST(Generate, ResumeSkipsCompletedTasks) {
  ScratchDir dir;
  auto config = config_for(dir, "suite3.jsonl", "script3.json", Mode::planning_only);
  cmd_generate(config);
  fs::remove(dir / "run" / "tasks" / "fx_is_palindrome.json");
  fs::remove_all(dir / "cache");
  config.resume = true;
  auto counting = std::make_shared<CountingProvider>(scripted("script3.json"));
  auto report = cmd_generate(config, counting);
  EXPECT_EQ(report.exit_code, exit_codes::ok);
  EXPECT_EQ(counting->sends.load(), 11u);
  EXPECT_EQ(load_record(dir / "run").tasks.size(), 3u);
}

TEST(Generate, ResumeRefusesOtherSuite) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite3.jsonl", "script3.json", Mode::direct));
  auto other = config_for(dir, "suite4.jsonl", "script4.json", Mode::direct);
  other.resume = true;
  EXPECT_THROW(cmd_generate(other), ConfigError);
}

TEST(Generate, ScriptGapMarksTaskFailedAndRunPartial) {
  ScratchDir dir;
  auto config = config_for(dir, "suite3.jsonl", "script4.json", Mode::direct);
  auto report = cmd_generate(config);
  EXPECT_EQ(report.exit_code, exit_codes::provider);
  EXPECT_EQ(read_json(dir / "run" / "record.json").at("status"), "partial");
  auto run = RunStore::open(dir / "run").load_task("fx/add");
  ASSERT_TRUE(run);
  EXPECT_FALSE(run->completed);
  EXPECT_TRUE(run->error);
}

TEST(RunStore, RejectsUnknownSchemaMajor) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite3.jsonl", "script3.json", Mode::direct));
  auto manifest = read_json(dir / "run" / "record.json");
  manifest["schema_version"] = "2.0";
  write_file_atomic(dir / "run" / "record.json", manifest.dump());
  EXPECT_THROW(RunStore::open(dir / "run"), SchemaVersionError);
  EXPECT_THROW(load_record(dir / "run"), SchemaVersionError);
  EXPECT_NO_THROW(check_schema_version("1.7"));
}

TEST(RunStore, MissingRecordIsIoError) {
  ScratchDir dir;
  EXPECT_THROW(RunStore::open(dir.path()), IoError);
}

TEST(Evaluate, ReportsBothLevels) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite4.jsonl", "script4.json", Mode::direct));
  ScoringOptions opts;
  opts.record_dir = dir / "run";
  auto report = cmd_evaluate(opts);
  EXPECT_EQ(report.exit_code, exit_codes::ok);
  auto metrics = read_json(dir / "run" / "metrics.json");
  auto golden = read_json(fixture("golden/metrics4.json"));
  EXPECT_EQ(metrics.at("correct_assertions"), golden.at("correct_assertions"));
  EXPECT_EQ(metrics.at("correct_tasks"), golden.at("correct_tasks"));
  EXPECT_EQ(format_pct(metrics.at("correct_assertions"), metrics.at("n_assertions")),
            golden.at("test_level_pct").get<std::string>());
  EXPECT_EQ(format_pct(metrics.at("correct_tasks"), metrics.at("n_tasks")),
            golden.at("task_level_pct").get<std::string>());
  for (const auto& [id, flags] : golden.at("per_assertion_correct").items()) {
    auto acc = read_json(dir / "run" / "accuracy" / (id.substr(0, 1) + "_" + id.substr(2) + ".json"));
    EXPECT_EQ(acc.at("per_assertion_correct"), flags) << id;
  }
  auto text = read_file(dir / "run" / "metrics.txt");
  EXPECT_NE(text.find("65.00"), std::string::npos);
  EXPECT_NE(text.find("25.00"), std::string::npos);
}

TEST(BugDetect, MatchesGolden) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite_bugs.jsonl", "script_bugs.json", Mode::direct));
  ScoringOptions opts;
  opts.record_dir = dir / "run";
  auto report = cmd_bug_detect(opts);
  auto got = read_json(dir / "run" / "bug_detection.json");
  auto golden = read_json(fixture("golden/bug_detection.json"));
  EXPECT_EQ(format_pct(got.at("detected"), got.at("variants")), golden.at("detection_rate_pct").get<std::string>());
  EXPECT_DOUBLE_EQ(got.at("detection_rate_pct").get<double>(), 66.67);
  EXPECT_EQ(got.at("detected"), golden.at("detected"));
  EXPECT_EQ(got.at("variants"), golden.at("variants"));
  EXPECT_EQ(got.at("excluded_variants"), golden.at("excluded_variants"));
}

TEST(SelfDebug, CanonicalAndBuggyRepairs) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite_selfdebug.jsonl", "script_selfdebug.json", Mode::direct));
  auto golden = read_json(fixture("golden/self_debug.json"));
  for (const auto& [which, script] : {std::pair{"canonical", "repair_canonical.json"}, {"buggy", "repair_buggy.json"}}) {
    SelfDebugOptions opts;
    opts.scoring.record_dir = dir / "run";
    opts.scoring.out_dir = dir / which;
    opts.script_path = fixture(script).string();
    opts.cache_dir = dir / (std::string("cache-") + which);
    auto report = cmd_self_debug(opts);
    auto got = read_json(dir / which / "self_debug.json");
    EXPECT_EQ(format_pct(got.at("hidden_pass"), got.at("variants")),
              golden.at(which).at("hidden_pass_pct").get<std::string>())
        << which;
    EXPECT_EQ(got.at("variants"), golden.at(which).at("variants")) << which;
  }
}

TEST(Replay, ReproducesRecordWithoutProvider) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite3.jsonl", "script3.json", Mode::full));
  fs::remove_all(dir / "cache");
  ReplayOptions opts;
  opts.record_dir = dir / "run";
  opts.out_dir = dir / "replay";
  auto report = cmd_replay(opts);
  EXPECT_EQ(report.provider_calls, 0u);
  EXPECT_TRUE(report.identical) << (report.differences.empty() ? "" : report.differences[0]);
  EXPECT_EQ(report.exit_code, exit_codes::ok);
}

TEST(Replay, MissingExchangeNamesIt) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite3.jsonl", "script3.json", Mode::planning_only));
  auto run = RunStore::open(dir / "run").load_task("fx/add");
  auto key = run->exchanges.at(5).cache_key;
  fs::remove(dir / "run" / "exchanges" / (key + ".txt"));
  ReplayOptions opts;
  opts.record_dir = dir / "run";
  opts.out_dir = dir / "replay";
  try {
    cmd_replay(opts);
    FAIL() << "expected CacheMissError";
  } catch (const CacheMissError& e) {
    EXPECT_EQ(e.key(), key);
  }
}

TEST(Replay, RefusesToOverwriteRecord) {
  ScratchDir dir;
  cmd_generate(config_for(dir, "suite3.jsonl", "script3.json", Mode::direct));
  ReplayOptions opts;
  opts.record_dir = dir / "run";
  opts.out_dir = dir / "run";
  EXPECT_THROW(cmd_replay(opts), ConfigError);
}

TEST(RecordDiff, ReportsPaths) {
  nlohmann::json a{{"x", {{"y", 1}, {"z", {1, 2}}}}};
  nlohmann::json b{{"x", {{"y", 2}, {"z", {1, 3}}}}};
  EXPECT_EQ(record_differences(a, b), (std::vector<std::string>{"/x/y", "/x/z/1"}));
  EXPECT_TRUE(record_differences(a, a).empty());
  EXPECT_EQ(strip_volatile({{"latency_ms", 5}, {"k", {{"wall_ms", 1}, {"v", 2}}}}), nlohmann::json({{"k", {{"v", 2}}}}));
}
