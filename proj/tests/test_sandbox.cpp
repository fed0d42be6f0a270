#include <gtest/gtest.h>

#include <chrono>

#include "oracle_forge/errors.hpp"
#include "oracle_forge/sandbox.hpp"
#include "test_support.hpp"

using namespace oracle_forge;
using oracle_forge::testing::fixture;
using oracle_forge::testing::inline_runner;
using oracle_forge::testing::no_cache_options;
using oracle_forge::testing::script_of;
using oracle_forge::testing::stub_sandbox;

namespace {

// Passes every assertion except those naming CRASH (runner dies) or HANG (runner sleeps).
const char* kFaultyRunner = R"(
import sys, json, os, time
job = json.load(sys.stdin)
for i, a in enumerate(job["assertions"]):
    if "CRASH" in a:
        sys.stderr.write("boom\n"); sys.stderr.flush(); os._exit(3)
    if "HANG" in a:
        time.sleep(60)
    print(json.dumps({"index": i, "status": "pass", "error_type": None, "error_message": None, "elapsed_ms": 0.1}), flush=True)
print(json.dumps({"summary": {"executed": len(job["assertions"]), "candidate_loaded": True, "load_error": None}}), flush=True)
)";

Sandbox inline_sandbox(const std::string& code) { return Sandbox(SandboxOptions{inline_runner(code), 2, true}); }

ExecLimits limits(int per = 2000, int total = 60000) {
  ExecLimits l;
  l.timeout_ms = per;
  l.total_timeout_ms = total;
  return l;
}

std::vector<std::string> statuses(const std::vector<Verdict>& vs) {
  std::vector<std::string> out;
  for (const auto& v : vs) out.emplace_back(to_string(v.status));
  return out;
}

}  // namespace

TEST(SandboxMatrix, EveryCaseClassifiedAsExpected) {
  auto cases = nlohmann::json::parse(read_file(fixture("sandbox_matrix.json"))).at("cases");
  auto sandbox = stub_sandbox();
  for (const auto& c : cases) {
    auto name = c.at("name").get<std::string>();
    auto started = std::chrono::steady_clock::now();
    auto vs = sandbox.execute(c.at("candidate").get<std::string>(), c.at("function_name").get<std::string>(),
                              {c.at("assertion").get<std::string>()}, limits(c.at("timeout_ms").get<int>()));
    auto elapsed = std::chrono::steady_clock::now() - started;
    ASSERT_EQ(vs.size(), 1u) << name;
    EXPECT_EQ(to_string(vs[0].status), c.at("status").get<std::string>()) << name;
    if (c.at("error_type").is_null()) {
      EXPECT_FALSE(vs[0].error_type) << name;
    } else {
      EXPECT_EQ(vs[0].error_type.value_or(""), c.at("error_type").get<std::string>()) << name;
    }
    if (vs[0].error_message) {
      EXPECT_LE(vs[0].error_message->size(), kMaxErrorMessage) << name;
    }
    EXPECT_LT(elapsed, std::chrono::milliseconds(c.at("timeout_ms").get<int>() * 2)) << name;
  }
}

TEST(Sandbox, AssertionsRunInIsolation) {
  auto sandbox = stub_sandbox();
  auto vs = sandbox.execute("def f(x):\n    return x\n", "f",
                            {"leak = 1\nassert True", "assert 'leak' not in globals()", "assert f(2) == 2"}, limits());
  EXPECT_EQ(statuses(vs), (std::vector<std::string>{"pass", "pass", "pass"})) << vs[0].error_message.value_or("");
}

TEST(Sandbox, TimeoutResumesAfterHungAssertion) {
  auto sandbox = stub_sandbox();
  auto vs = sandbox.execute("def f():\n    while True: pass\n", "f",
                            {"assert 1 == 1", "assert f()", "assert 2 == 2", "assert 1 == 2"}, limits(1000));
  EXPECT_EQ(statuses(vs), (std::vector<std::string>{"pass", "timeout", "pass", "assertion_failed"}));
  for (std::size_t i = 0; i < vs.size(); ++i) EXPECT_EQ(vs[i].input_index, i);
}

TEST(Sandbox, RunnerCrashIsRuntimeErrorAndLaterAssertionsStillRun) {
  auto sandbox = inline_sandbox(kFaultyRunner);
  auto vs = sandbox.execute("def f(): pass", "f", {"assert 1", "CRASH", "assert 2", "CRASH", "assert 3"}, limits());
  EXPECT_EQ(statuses(vs), (std::vector<std::string>{"pass", "runtime_error", "pass", "runtime_error", "pass"}));
  EXPECT_EQ(vs[1].error_type, std::optional<std::string>("RunnerCrashed"));
  EXPECT_NE(vs[1].error_message->find("boom"), std::string::npos);
}

TEST(Sandbox, BatchTimeoutMarksRemainderNotExecuted) {
  auto sandbox = inline_sandbox(kFaultyRunner);
  auto started = std::chrono::steady_clock::now();
  auto vs = sandbox.execute("def f(): pass", "f", {"HANG", "HANG", "assert 3"}, limits(500, 1200));
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::milliseconds(3000));
  EXPECT_EQ(statuses(vs), (std::vector<std::string>{"not_executed", "not_executed", "not_executed"}));
  EXPECT_NE(vs[0].error_message.value_or("").find("batch timeout"), std::string::npos);
}

TEST(Sandbox, CandidateLoadFailureFailsEveryAssertion) {
  auto sandbox = stub_sandbox();
  auto vs = sandbox.execute("def f(:\n", "f", {"assert f() == 1", "assert True"}, limits());
  EXPECT_EQ(statuses(vs), (std::vector<std::string>{"candidate_error", "candidate_error"}));
}

TEST(Sandbox, EmptyBatch) { EXPECT_TRUE(stub_sandbox().execute("def f(): pass", "f", {}, limits()).empty()); }

TEST(Sandbox, NonJsonOutputIsProtocolError) {
  auto sandbox = inline_sandbox("import sys; sys.stdin.read(); print('hello')");
  EXPECT_THROW(sandbox.execute("def f(): pass", "f", {"assert 1"}, limits()), ProtocolError);
}

TEST(Sandbox, OutOfOrderIndexIsProtocolError) {
  auto sandbox = inline_sandbox(
      "import sys, json; sys.stdin.read(); "
      "print(json.dumps({'index': 1, 'status': 'pass', 'error_type': None, 'error_message': None, 'elapsed_ms': 0}))");
  EXPECT_THROW(sandbox.execute("def f(): pass", "f", {"assert 1", "assert 2"}, limits()), ProtocolError);
}

TEST(Sandbox, OrchestratorOnlyStatusFromRunnerIsProtocolError) {
  auto sandbox = inline_sandbox(
      "import sys, json; sys.stdin.read(); "
      "print(json.dumps({'index': 0, 'status': 'timeout', 'error_type': None, 'error_message': None, 'elapsed_ms': 0}))");
  EXPECT_THROW(sandbox.execute("def f(): pass", "f", {"assert 1"}, limits()), ProtocolError);
}

TEST(Sandbox, MissingRunnerIsSpawnError) {
  Sandbox sandbox(SandboxOptions{{"/nonexistent/runner-binary"}, 1, true});
  EXPECT_THROW(sandbox.execute("def f(): pass", "f", {"assert 1"}, limits()), RunnerSpawnError);
}

TEST(Sandbox, JobCarriesWireFields) {
  auto job = runner_job("src", "f", {"assert 1"}, 1234);
  EXPECT_EQ(job.at("candidate_code"), "src");
  EXPECT_EQ(job.at("function_name"), "f");
  EXPECT_EQ(job.at("assertions"), nlohmann::json::array({"assert 1"}));
  EXPECT_EQ(job.at("timeout_ms"), 1234);
}

TEST(Sandbox, ValidateReportsAllPass) {
  auto sandbox = stub_sandbox();
  OracleSet oracles{"t", {{"assert f(1) == 2", 0, "curator"}, {"assert f(2) == 4", 1, "curator"}}};
  auto report = sandbox.validate({"def f(x):\n    return 2 * x\n", "f", ""}, oracles, limits());
  EXPECT_TRUE(report.all_pass);
  EXPECT_EQ(report.task_id, "t");
  EXPECT_EQ(report.candidate_digest, content_digest("def f(x):\n    return 2 * x\n"));
  oracles.assertions[1].source_text = "assert f(2) == 5";
  report = sandbox.validate({"def f(x):\n    return 2 * x\n", "f", ""}, oracles, limits());
  EXPECT_FALSE(report.all_pass);
  auto failed = failed_subset(report, oracles);
  ASSERT_EQ(failed.size(), 1u);
  EXPECT_EQ(failed[0].input_index, 1u);
}

TEST(Sandbox, LimitsValidated) {
  EXPECT_THROW(limits(0).check(), ConfigError);
  EXPECT_THROW(limits(5000, 1000).check(), ConfigError);
  EXPECT_NO_THROW(limits().check());
}

TEST(Sandbox, ConcurrentBatchesShareThePool) {
  auto sandbox = stub_sandbox(2);
  std::vector<std::thread> threads;
  std::vector<std::vector<Verdict>> results(6);
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&, i] {
      results[i] = sandbox.execute("def f(x):\n    return x\n", "f", {"assert f(" + std::to_string(i) + ") == " +
                                                                         std::to_string(i)},
                                   limits());
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_EQ(statuses(r), std::vector<std::string>{"pass"});
}

TEST(CandidateGeneration, RetriesOnceWhenReplyHasNoDefinition) {
  Task task{"t", "def f(x): identity", "f", {"(1,)"}, {}, {}, {}};
  auto provider = std::make_shared<ScriptedProvider>(script_of({
      {"candidate_code", std::nullopt, "I would return x.", std::nullopt},
      {"candidate_code:retry", std::nullopt, "```python\ndef f(x):\n    return x\n```", std::nullopt},
  }));
  Gateway gw(provider, no_cache_options());
  Transcript tr;
  auto out = generate_candidate(task, gw, PromptLibrary::builtin(), {}, tr);
  ASSERT_TRUE(out.available());
  EXPECT_EQ(out.code->source_text, "def f(x):\n    return x");
  ASSERT_EQ(tr.exchanges.size(), 2u);
  EXPECT_EQ(tr.exchanges[1].request.request_tag, "candidate_code:retry");
  EXPECT_NE(tr.exchanges[1].request.user_text.find("previous reply"), std::string::npos);
}

TEST(CandidateGeneration, UnavailableAfterSecondFailure) {
  Task task{"t", "def f(x): identity", "f", {"(1,)"}, {}, {}, {}};
  auto provider = std::make_shared<ScriptedProvider>(script_of({
      {"candidate_code*", std::nullopt, "```python\ndef g(x):\n    return x\n```", std::nullopt},
  }));
  Gateway gw(provider, no_cache_options());
  Transcript tr;
  auto out = generate_candidate(task, gw, PromptLibrary::builtin(), {}, tr);
  EXPECT_FALSE(out.available());
  EXPECT_EQ(tr.exchanges.size(), 2u);
}
