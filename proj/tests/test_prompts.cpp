#include <gtest/gtest.h>

#include <random>

#include "oracle_forge/errors.hpp"
#include "oracle_forge/prompts.hpp"

using namespace oracle_forge;

namespace {

OracleSet numbered(std::size_t n, const std::string& origin = "tentative") {
  OracleSet o{"t", {}};
  for (std::size_t i = 0; i < n; ++i) o.assertions.push_back({"assert f(" + std::to_string(i) + ") == 0", i, origin});
  return o;
}

}  // namespace

TEST(Templates, EveryBuiltinLoadsAndNamesItsBindings) {
  const auto& lib = PromptLibrary::builtin();
  for (auto id : kAllTemplates) {
    const auto& t = lib.get(id);
    EXPECT_FALSE(t.system_text().empty()) << to_string(id);
    EXPECT_FALSE(t.user_text().empty()) << to_string(id);
    Bindings b;
    for (const auto& name : t.required_bindings()) b[name] = "<" + name + ">";
    auto rendered = t.render(b);
    for (const auto& name : t.required_bindings()) {
      auto marker = "<" + name + ">";
      EXPECT_TRUE(rendered.user_text.find(marker) != std::string::npos ||
                  rendered.system_text.find(marker) != std::string::npos)
          << name;
    }
  }
}

TEST(Templates, NamesRoundTrip) {
  for (auto id : kAllTemplates) EXPECT_EQ(template_id_from_string(to_string(id)), id);
  EXPECT_THROW(template_id_from_string("nope"), UnknownTemplateError);
}

TEST(Templates, TentativeUsesSpecifiedBindings) {
  const auto& t = PromptLibrary::builtin().get(TemplateId::tentative);
  std::set<std::string> expected{"len", "task_description", "test_inputs_formatted"};
  EXPECT_EQ(t.required_bindings(), expected);
}

TEST(Templates, MissingBindingNamesPlaceholder) {
  const auto& t = PromptLibrary::builtin().get(TemplateId::requirements);
  try {
    t.render({});
    FAIL() << "expected MissingBindingError";
  } catch (const MissingBindingError& e) {
    EXPECT_EQ(e.placeholder(), "task_description");
  }
}

TEST(Substitute, SplicesWithoutEscaping) {
  EXPECT_EQ(substitute("a {x} b", {{"x", "{y} \"q\""}}), "a {y} \"q\" b");
}

TEST(Substitute, DoubledBracesAreLiteral) {
  EXPECT_EQ(substitute("{{x}} {x}", {{"x", "1"}}), "{x} 1");
  EXPECT_EQ(placeholders_in("{{x}} {y} { z }"), std::set<std::string>{"y"});
}

TEST(Substitute, MissingThrows) { EXPECT_THROW(substitute("{nope}", {}), MissingBindingError); }

TEST(Extract, PrefersLastFencedBlockWithAssertions) {
  std::string reply =
      "Draft:\n```python\nassert f(0) == 9\n```\nFinal:\n```python\nassert f(0) == 1\nassert f(1) == 2\n```\n"
      "```text\nnothing here\n```\n";
  auto r = extract_assertions(reply, 2);
  EXPECT_EQ(r.lines, (std::vector<std::string>{"assert f(0) == 1", "assert f(1) == 2"}));
  EXPECT_TRUE(r.diagnostics.empty());
}

TEST(Extract, FallsBackToWholeTextWithDiagnostic) {
  auto r = extract_assertions("assert f(0) == 1\nprose\n  assert f(1) == 2", 2);
  EXPECT_EQ(r.lines.size(), 2u);
  EXPECT_EQ(r.diagnostics, std::vector<std::string>{"no_code_fence"});
}

TEST(Extract, CountMismatchTruncatesSurplus) {
  auto r = extract_assertions("```\nassert a\nassert b\nassert c\n```", 2);
  EXPECT_EQ(r.lines.size(), 2u);
  EXPECT_EQ(r.diagnostics, std::vector<std::string>{"count_mismatch(found=3)"});
}

TEST(Extract, NoAssertionsNeverThrows) {
  auto r = extract_assertions("I cannot help with that.", 3);
  EXPECT_TRUE(r.lines.empty());
  EXPECT_NE(std::find(r.diagnostics.begin(), r.diagnostics.end(), "no_assertions"), r.diagnostics.end());
}

TEST(Extract, IgnoresLookalikes) {
  auto r = extract_assertions("```\nassertion = 1\nasserts(x)\nassert(f(1) == 1)\n```", 1);
  EXPECT_EQ(r.lines, std::vector<std::string>{"assert(f(1) == 1)"});
}

TEST(Extract, StripsTrailingCommentsOutsideStrings) {
  auto r = extract_assertions("```\nassert f('#a') == '#'  # check hash\nassert g(1) == 2 # ok\n```", 2);
  EXPECT_EQ(r.lines, (std::vector<std::string>{"assert f('#a') == '#'", "assert g(1) == 2"}));
}

TEST(StripComment, Cases) {
  EXPECT_EQ(strip_trailing_comment("x = 1  # c"), "x = 1");
  EXPECT_EQ(strip_trailing_comment("s = \"a # b\""), "s = \"a # b\"");
  EXPECT_EQ(strip_trailing_comment("s = 'it\\'s # x' # y"), "s = 'it\\'s # x'");
  EXPECT_EQ(strip_trailing_comment("s = '''a#b''' # c"), "s = '''a#b'''");
}

TEST(ExtractCode, LastFencedBlockWithDef) {
  std::string reply = "```python\ndef f(x):\n    return 0\n```\nBetter:\n```python\ndef f(x):\n    return x\n```\n";
  EXPECT_EQ(extract_code_block(reply), "def f(x):\n    return x");
}

TEST(ExtractCode, UnfencedDefinition) {
  std::string reply = "Sure.\n\nimport math\ndef f(x):\n    return math.floor(x)\n\nThat is all.";
  EXPECT_EQ(extract_code_block(reply), "import math\ndef f(x):\n    return math.floor(x)");
}

TEST(ExtractCode, NoDefinitionThrows) {
  EXPECT_THROW(extract_code_block("I would write a function."), NoCodeFoundError);
}

TEST(DefinesFunction, MatchesWholeName) {
  EXPECT_TRUE(defines_function("def add(a, b):\n    pass", "add"));
  EXPECT_TRUE(defines_function("import x\nasync def add (a):\n  pass", "add"));
  EXPECT_FALSE(defines_function("def add_one(a):\n    pass", "add"));
}

TEST(Align, LengthAlwaysMatchesExpected) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = rng() % 25;
    std::size_t got = rng() % 30;
    std::size_t prev = rng() % 30;
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < got; ++i) lines.push_back("assert x == " + std::to_string(i));
    auto r = align(lines, numbered(prev), n, "curator");
    ASSERT_TRUE(r.oracles.aligned_to(n)) << n << " " << got << " " << prev;
  }
}

TEST(Align, IdempotentOnAlignedInput) {
  auto prev = numbered(5);
  auto once = align(prev.lines(), prev, 5, "curator").oracles;
  auto twice = align(once.lines(), once, 5, "curator").oracles;
  EXPECT_EQ(once, twice);
}

TEST(Align, BackfillsFromPreviousThenPlaceholder) {
  auto r = align({"assert new"}, numbered(2), 3, "curator");
  EXPECT_EQ(r.oracles.assertions[0].source_text, "assert new");
  EXPECT_EQ(r.oracles.assertions[0].origin, "curator");
  EXPECT_EQ(r.oracles.assertions[1].origin, "tentative");
  EXPECT_EQ(r.oracles.assertions[2].source_text, "assert False");
  EXPECT_EQ(r.diagnostics, std::vector<std::string>{"backfilled(2 from index 1)"});
}

TEST(CallExpression, WrapsOnlyWhenNeeded) {
  EXPECT_EQ(call_expression("add", "(1, 2)"), "add(1, 2)");
  EXPECT_EQ(call_expression("f", "('a)', 1)"), "f('a)', 1)");
  EXPECT_EQ(call_expression("f", "(1), (2)"), "f((1), (2))");
  EXPECT_EQ(call_expression("f", "[1, 2]"), "f([1, 2])");
  EXPECT_EQ(call_expression("f", "5"), "f(5)");
}

TEST(Formatting, NumberedInputsAndPlainAssertions) {
  EXPECT_EQ(format_test_inputs("f", {"(1,)", "(2,)"}), "1. f(1,)\n2. f(2,)");
  EXPECT_EQ(format_assertions(numbered(2)), "assert f(0) == 0\nassert f(1) == 0");
}

TEST(OracleSet, JsonRoundTrip) {
  auto o = numbered(3, "refined:1");
  nlohmann::json j = o;
  EXPECT_EQ(j.get<OracleSet>(), o);
}
