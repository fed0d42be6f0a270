#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace oracle_forge {

enum class TemplateId {
  tentative,
  requirements,
  panelist,
  interpreter,
  curator,
  candidate_code,
  refinement,
  self_debug_feedback,
};

inline constexpr std::array<TemplateId, 8> kAllTemplates = {
    TemplateId::tentative,  TemplateId::requirements,   TemplateId::panelist,
    TemplateId::interpreter, TemplateId::curator,       TemplateId::candidate_code,
    TemplateId::refinement, TemplateId::self_debug_feedback,
};

std::string_view to_string(TemplateId id);
// Throws UnknownTemplateError.
TemplateId template_id_from_string(std::string_view name);

using Bindings = std::map<std::string, std::string, std::less<>>;

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

// A prompt pair with {placeholder} markers; "{{" and "}}" are literal braces.
class PromptTemplate {
 public:
  PromptTemplate(TemplateId id, std::string system_text, std::string user_text);

  TemplateId id() const noexcept { return id_; }
  const std::string& system_text() const noexcept { return system_text_; }
  const std::string& user_text() const noexcept { return user_text_; }
  const std::set<std::string>& required_bindings() const noexcept { return required_; }

  // Pure splicing, no escaping of bound values. Throws MissingBindingError.
  RenderedPrompt render(const Bindings& bindings) const;

 private:
  TemplateId id_;
  std::string system_text_;
  std::string user_text_;
  std::set<std::string> required_;
};

// Splices bindings into one template body. Exposed for tests.
std::string substitute(std::string_view body, const Bindings& bindings);
std::set<std::string> placeholders_in(std::string_view body);

class PromptLibrary {
 public:
  // The template files compiled into the library from templates/.
  static const PromptLibrary& builtin();
  // Reads <id>.system.txt / <id>.user.txt for every template id.
  static PromptLibrary from_directory(const std::filesystem::path& dir);

  const PromptTemplate& get(TemplateId id) const;
  RenderedPrompt render(TemplateId id, const Bindings& bindings) const { return get(id).render(bindings); }

 private:
  std::vector<PromptTemplate> templates_;
};

struct Assertion {
  std::string source_text;
  std::size_t input_index = 0;
  // "tentative", "panelist:<role>", "curator", "refined:<iteration>", "placeholder".
  std::string origin;

  bool operator==(const Assertion&) const = default;
};

struct OracleSet {
  std::string task_id;
  std::vector<Assertion> assertions;

  std::size_t size() const noexcept { return assertions.size(); }
  bool operator==(const OracleSet&) const = default;
  // True when assertions are exactly indices 0..N-1 in order and N == expected.
  bool aligned_to(std::size_t expected) const;
  std::vector<std::string> lines() const;
};

struct ExtractionResult {
  std::vector<std::string> lines;
  std::vector<std::string> diagnostics;
};

// Never throws. Prefers the last fenced block holding assertions; else scans the whole text.
ExtractionResult extract_assertions(std::string_view reply_text, std::size_t expected_count);

// Last fenced block, or the longest run of lines starting at a `def`. Throws NoCodeFoundError.
std::string extract_code_block(std::string_view reply_text);

// Drops a trailing `# comment` that sits outside any string literal.
std::string strip_trailing_comment(std::string_view line);

bool defines_function(std::string_view source, std::string_view function_name);

struct AlignResult {
  OracleSet oracles;
  std::vector<std::string> diagnostics;
};

// Line i becomes assertion i; deficit positions keep `previous`, surplus is dropped.
AlignResult align(const std::vector<std::string>& extracted, const OracleSet& previous,
                  std::size_t expected_count, const std::string& origin);

// "add" + "(1, 2)" -> "add(1, 2)"; snippets without enclosing parentheses get wrapped.
std::string call_expression(std::string_view function_name, std::string_view input_snippet);

// "1. add(1, 2)" per line.
std::string format_test_inputs(std::string_view function_name, const std::vector<std::string>& inputs);
// One assertion per line, unnumbered.
std::string format_assertions(const OracleSet& oracles);

void to_json(nlohmann::json& j, const Assertion& a);
void from_json(const nlohmann::json& j, Assertion& a);
void to_json(nlohmann::json& j, const OracleSet& o);
void from_json(const nlohmann::json& j, OracleSet& o);

}  // namespace oracle_forge
