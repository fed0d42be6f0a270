#include <gtest/gtest.h>

#include "oracle_forge/errors.hpp"
#include "oracle_forge/task.hpp"
#include "test_support.hpp"

using namespace oracle_forge;
using oracle_forge::testing::fixture;
using oracle_forge::testing::ScratchDir;

namespace {

std::string task_line(const std::string& id, const std::string& fn = "add", int inputs = 20) {
  nlohmann::json j{{"task_id", id}, {"description", "def " + fn + "(a, b): sum"}, {"function_name", fn}};
  std::vector<std::string> in;
  for (int i = 0; i < inputs; ++i) in.push_back("(" + std::to_string(i) + ", 1)");
  j["test_inputs"] = in;
  return j.dump();
}

Task valid_task() {
  Task t;
  t.task_id = "t";
  t.description = "def add(a, b): return the sum";
  t.function_name = "add";
  for (int i = 0; i < 20; ++i) t.test_inputs.push_back("(" + std::to_string(i) + ", 2)");
  return t;
}

}  // namespace

TEST(TaskSuite, LoadsLinesInFileOrder) {
  auto suite = parse_suite(task_line("c") + "\n" + task_line("a") + "\n" + task_line("b") + "\n", "s");
  ASSERT_EQ(suite.tasks.size(), 3u);
  EXPECT_EQ(suite.tasks[0].task_id, "c");
  EXPECT_EQ(suite.tasks[1].task_id, "a");
  EXPECT_EQ(suite.tasks[2].task_id, "b");
}

TEST(TaskSuite, MissingFunctionNameNamesTheLine) {
  nlohmann::json broken = nlohmann::json::parse(task_line("b"));
  broken.erase("function_name");
  try {
    parse_suite(task_line("a") + "\n" + broken.dump() + "\n", "s");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(TaskSuite, MalformedJsonIsFormatError) {
  EXPECT_THROW(parse_suite(task_line("a") + "\n{not json\n", "s"), FormatError);
}

TEST(TaskSuite, DuplicateIdsRejected) {
  EXPECT_THROW(parse_suite(task_line("t1") + "\n" + task_line("t1") + "\n", "s"), DuplicateIdError);
}

TEST(TaskSuite, BlankLinesAndMissingTrailingNewlineAccepted) {
  auto suite = parse_suite(task_line("a") + "\n\n" + task_line("b"), "s");
  EXPECT_EQ(suite.tasks.size(), 2u);
}

TEST(TaskSuite, UnreadablePathIsIoError) {
  EXPECT_THROW(load_suite("/nonexistent/suite.jsonl"), IoError);
}

TEST(TaskSuite, RoundTripThroughSerialization) {
  auto suite = load_suite(fixture("suite_bugs.jsonl"));
  auto again = parse_suite(serialize_suite(suite), suite.suite_id, suite.source_path);
  EXPECT_EQ(suite, again);
  ASSERT_TRUE(again.tasks[0].buggy_variants);
  EXPECT_EQ(again.tasks[0].buggy_variants->size(), 2u);
}

TEST(TaskSuite, LoadingIsDeterministic) {
  ScratchDir dir;
  auto text = read_file(fixture("suite3.jsonl"));
  write_file_atomic(dir / "copy.jsonl", text);
  auto a = load_suite(fixture("suite3.jsonl"));
  auto b = load_suite(dir / "copy.jsonl");
  EXPECT_EQ(a.tasks, b.tasks);
  EXPECT_EQ(a.suite_id, "suite3");
}

TEST(TaskSuite, FindById) {
  auto suite = load_suite(fixture("suite3.jsonl"));
  ASSERT_NE(suite.find("fx/add"), nullptr);
  EXPECT_EQ(suite.find("fx/add")->function_name, "add");
  EXPECT_EQ(suite.find("missing"), nullptr);
}

TEST(ValidateTask, ValidTaskHasNoDiagnostics) { EXPECT_TRUE(validate_task(valid_task()).empty()); }

TEST(ValidateTask, EmptyInputsIsError) {
  auto t = valid_task();
  t.test_inputs.clear();
  auto d = validate_task(t);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].severity, Severity::error);
  EXPECT_NE(d[0].message.find("test_inputs empty"), std::string::npos);
}

TEST(ValidateTask, BadIdentifierIsError) {
  auto t = valid_task();
  t.function_name = "2bad";
  t.description = "2bad";
  auto d = validate_task(t);
  ASSERT_FALSE(d.empty());
  EXPECT_TRUE(has_errors(d));
  EXPECT_NE(d[0].message.find("identifier"), std::string::npos);
}

TEST(ValidateTask, FewerThanTwentyInputsIsWarningOnly) {
  auto t = valid_task();
  t.test_inputs.resize(5);
  auto d = validate_task(t);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].severity, Severity::warning);
  EXPECT_FALSE(has_errors(d));
}

TEST(ValidateTask, NameMustAppearInDescriptionOrCanonical) {
  auto t = valid_task();
  t.description = "sum two numbers";
  EXPECT_TRUE(has_errors(validate_task(t)));
  t.canonical_solution = "def add(a, b):\n    return a + b";
  EXPECT_FALSE(has_errors(validate_task(t)));
}

TEST(ValidateTask, MultilineInputIsError) {
  auto t = valid_task();
  t.test_inputs[3] = "(1,\n 2)";
  EXPECT_TRUE(has_errors(validate_task(t)));
}

TEST(ValidateTask, DoesNotMutate) {
  const auto t = valid_task();
  auto copy = t;
  validate_task(copy);
  EXPECT_EQ(copy, t);
}

TEST(Identifier, Syntax) {
  EXPECT_TRUE(is_identifier("add"));
  EXPECT_TRUE(is_identifier("_private2"));
  EXPECT_FALSE(is_identifier("2bad"));
  EXPECT_FALSE(is_identifier(""));
  EXPECT_FALSE(is_identifier("a-b"));
}
