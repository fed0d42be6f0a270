#include "oracle_forge/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "oracle_forge/embedded_templates.hpp"
#include "oracle_forge/errors.hpp"

namespace oracle_forge {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

// Scans a `{name}` marker starting at body[i] == '{'. Returns the name length or 0.
std::size_t placeholder_at(std::string_view body, std::size_t i) {
  if (i + 2 >= body.size() || !is_ident_start(body[i + 1])) return 0;
  std::size_t j = i + 1;
  while (j < body.size() && is_ident_char(body[j])) ++j;
  if (j < body.size() && body[j] == '}') return j - i - 1;
  return 0;
}

struct FencedBlock {
  std::vector<std::string_view> lines;
};

bool is_fence(std::string_view line) { return trim(line).substr(0, 3) == "```"; }

std::vector<FencedBlock> fenced_blocks(const std::vector<std::string_view>& lines) {
  std::vector<FencedBlock> blocks;
  bool open = false;
  for (auto line : lines) {
    if (is_fence(line)) {
      if (open) {
        open = false;
      } else {
        blocks.emplace_back();
        open = true;
      }
      continue;
    }
    if (open) blocks.back().lines.push_back(line);
  }
  return blocks;
}

bool is_assert_line(std::string_view trimmed) {
  if (trimmed.size() <= 6 || trimmed.substr(0, 6) != "assert") return false;
  char next = trimmed[6];
  return next == ' ' || next == '\t' || next == '(';
}

std::vector<std::string> collect_assertions(const std::vector<std::string_view>& lines) {
  std::vector<std::string> out;
  for (auto line : lines) {
    auto t = trim(line);
    if (!is_assert_line(t)) continue;
    auto cleaned = std::string(trim(strip_trailing_comment(t)));
    if (is_assert_line(cleaned)) out.push_back(std::move(cleaned));
  }
  return out;
}

// Index of the quote that closes the string literal opening at `i`, or npos.
std::size_t skip_string(std::string_view s, std::size_t i) {
  char quote = s[i];
  bool triple = s.substr(i, 3) == std::string(3, quote);
  std::size_t j = i + (triple ? 3 : 1);
  while (j < s.size()) {
    if (s[j] == '\\') {
      j += 2;
      continue;
    }
    if (triple) {
      if (s.substr(j, 3) == std::string(3, quote)) return j + 2;
    } else if (s[j] == quote) {
      return j;
    }
    ++j;
  }
  return std::string_view::npos;
}

const std::regex& def_line_regex() {
  static const std::regex re(R"(^(async[ \t]+)?def[ \t]+[A-Za-z_][A-Za-z0-9_]*[ \t]*\()");
  return re;
}

bool starts_code_run(std::string_view line) {
  if (line.empty() || line.front() == ' ' || line.front() == '\t') return false;
  for (std::string_view kw : {"def ", "async def ", "import ", "from ", "class ", "@"}) {
    if (line.substr(0, kw.size()) == kw) return true;
  }
  return false;
}

std::string join(const std::vector<std::string_view>& lines, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i != begin) out += '\n';
    out += lines[i];
  }
  return out;
}

bool contains_def(const std::vector<std::string_view>& lines, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    std::string line(trim(lines[i]));
    if (std::regex_search(line, def_line_regex())) return true;
  }
  return false;
}

constexpr std::pair<TemplateId, std::string_view> kTemplateNames[] = {
    {TemplateId::tentative, "tentative"},
    {TemplateId::requirements, "requirements"},
    {TemplateId::panelist, "panelist"},
    {TemplateId::interpreter, "interpreter"},
    {TemplateId::curator, "curator"},
    {TemplateId::candidate_code, "candidate_code"},
    {TemplateId::refinement, "refinement"},
    {TemplateId::self_debug_feedback, "self_debug_feedback"},
};

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Template files end with a newline that is not part of the prompt body.
std::string chomp(std::string text) {
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

}  // namespace

std::string_view to_string(TemplateId id) {
  for (const auto& [tid, name] : kTemplateNames) {
    if (tid == id) return name;
  }
  return "unknown";
}

TemplateId template_id_from_string(std::string_view name) {
  for (const auto& [tid, n] : kTemplateNames) {
    if (n == name) return tid;
  }
  throw UnknownTemplateError("unknown template id: " + std::string(name));
}

std::set<std::string> placeholders_in(std::string_view body) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '{') {
      if (i + 1 < body.size() && body[i + 1] == '{') {
        ++i;
        continue;
      }
      if (auto n = placeholder_at(body, i)) {
        out.emplace(body.substr(i + 1, n));
        i += n + 1;
      }
    }
  }
  return out;
}

std::string substitute(std::string_view body, const Bindings& bindings) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if ((c == '{' || c == '}') && i + 1 < body.size() && body[i + 1] == c) {
      out += c;
      ++i;
      continue;
    }
    if (c == '{') {
      if (auto n = placeholder_at(body, i)) {
        auto name = body.substr(i + 1, n);
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingBindingError(std::string(name));
        out += it->second;
        i += n + 1;
        continue;
      }
    }
    out += c;
  }
  return out;
}

PromptTemplate::PromptTemplate(TemplateId id, std::string system_text, std::string user_text)
    : id_(id), system_text_(std::move(system_text)), user_text_(std::move(user_text)) {
  required_ = placeholders_in(system_text_);
  required_.merge(placeholders_in(user_text_));
}

RenderedPrompt PromptTemplate::render(const Bindings& bindings) const {
  for (const auto& name : required_) {
    if (bindings.find(name) == bindings.end()) throw MissingBindingError(name);
  }
  return {substitute(system_text_, bindings), substitute(user_text_, bindings)};
}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary library = [] {
    PromptLibrary lib;
    for (const auto& [id, name] : kTemplateNames) {
      std::string system, user;
      for (const auto& entry : embedded::kTemplateFiles) {
        if (entry.name == std::string(name) + ".system") system = entry.text;
        if (entry.name == std::string(name) + ".user") user = entry.text;
      }
      lib.templates_.emplace_back(id, chomp(std::move(system)), chomp(std::move(user)));
    }
    return lib;
  }();
  return library;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (const auto& [id, name] : kTemplateNames) {
    auto base = std::string(name);
    lib.templates_.emplace_back(id, chomp(read_text(dir / (base + ".system.txt"))),
                                chomp(read_text(dir / (base + ".user.txt"))));
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const {
  for (const auto& t : templates_) {
    if (t.id() == id) return t;
  }
  throw UnknownTemplateError("template not loaded: " + std::string(to_string(id)));
}

bool OracleSet::aligned_to(std::size_t expected) const {
  if (assertions.size() != expected) return false;
  for (std::size_t i = 0; i < assertions.size(); ++i) {
    if (assertions[i].input_index != i) return false;
  }
  return true;
}

std::vector<std::string> OracleSet::lines() const {
  std::vector<std::string> out;
  out.reserve(assertions.size());
  for (const auto& a : assertions) out.push_back(a.source_text);
  return out;
}

std::string strip_trailing_comment(std::string_view line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' || c == '\'') {
      auto close = skip_string(line, i);
      if (close == std::string_view::npos) break;
      i = close;
    } else if (c == '#') {
      return std::string(trim(line.substr(0, i)));
    }
  }
  return std::string(trim(line));
}

ExtractionResult extract_assertions(std::string_view reply_text, std::size_t expected_count) {
  ExtractionResult result;
  auto lines = split_lines(reply_text);
  auto blocks = fenced_blocks(lines);

  bool from_fence = false;
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    auto found = collect_assertions(it->lines);
    if (!found.empty()) {
      result.lines = std::move(found);
      from_fence = true;
      break;
    }
  }
  if (!from_fence) {
    result.diagnostics.emplace_back("no_code_fence");
    result.lines = collect_assertions(lines);
  }
  if (result.lines.empty()) result.diagnostics.emplace_back("no_assertions");
  if (result.lines.size() != expected_count) {
    result.diagnostics.push_back("count_mismatch(found=" + std::to_string(result.lines.size()) + ")");
    if (result.lines.size() > expected_count) result.lines.resize(expected_count);
  }
  return result;
}

std::string extract_code_block(std::string_view reply_text) {
  std::string normalized;
  normalized.reserve(reply_text.size());
  for (std::size_t i = 0; i < reply_text.size(); ++i) {
    if (reply_text[i] == '\r') {
      normalized += '\n';
      if (i + 1 < reply_text.size() && reply_text[i + 1] == '\n') ++i;
    } else {
      normalized += reply_text[i];
    }
  }
  auto lines = split_lines(normalized);
  auto blocks = fenced_blocks(lines);
  if (!blocks.empty()) {
    const auto& last = blocks.back().lines;
    if (contains_def(last, 0, last.size())) {
      std::size_t end = last.size();
      while (end > 0 && trim(last[end - 1]).empty()) --end;
      return join(last, 0, end);
    }
  }

  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!starts_code_run(lines[i])) continue;
    std::size_t j = i + 1;
    while (j < lines.size()) {
      auto line = lines[j];
      bool continues = line.empty() || line.front() == ' ' || line.front() == '\t' || starts_code_run(line);
      if (!continues || is_fence(line)) break;
      ++j;
    }
    while (j > i && trim(lines[j - 1]).empty()) --j;
    if (contains_def(lines, i, j) && j - i > best_len) {
      best_begin = i;
      best_len = j - i;
    }
    i = j > i ? j - 1 : i;
  }
  if (best_len == 0) throw NoCodeFoundError("reply contains no function definition");
  return join(lines, best_begin, best_begin + best_len);
}

bool defines_function(std::string_view source, std::string_view function_name) {
  std::regex re("(^|\\n)[ \\t]*(async[ \\t]+)?def[ \\t]+" + std::string(function_name) + "[ \\t]*\\(");
  return std::regex_search(source.begin(), source.end(), re);
}

AlignResult align(const std::vector<std::string>& extracted, const OracleSet& previous,
                  std::size_t expected_count, const std::string& origin) {
  AlignResult result;
  result.oracles.task_id = previous.task_id;
  result.oracles.assertions.reserve(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    if (i < extracted.size()) {
      result.oracles.assertions.push_back({extracted[i], i, origin});
    } else if (i < previous.assertions.size()) {
      auto kept = previous.assertions[i];
      kept.input_index = i;
      result.oracles.assertions.push_back(std::move(kept));
    } else {
      result.oracles.assertions.push_back({"assert False", i, "placeholder"});
    }
  }
  if (extracted.size() < expected_count) {
    result.diagnostics.push_back("backfilled(" + std::to_string(expected_count - extracted.size()) +
                                 " from index " + std::to_string(extracted.size()) + ")");
  } else if (extracted.size() > expected_count) {
    result.diagnostics.push_back("truncated(found=" + std::to_string(extracted.size()) + ")");
  }
  return result;
}

std::string call_expression(std::string_view function_name, std::string_view input_snippet) {
  auto snippet = trim(input_snippet);
  if (!snippet.empty() && snippet.front() == '(') {
    int depth = 0;
    std::size_t close = std::string_view::npos;
    for (std::size_t i = 0; i < snippet.size(); ++i) {
      char c = snippet[i];
      if (c == '"' || c == '\'') {
        auto end = skip_string(snippet, i);
        if (end == std::string_view::npos) break;
        i = end;
      } else if (c == '(' || c == '[' || c == '{') {
        ++depth;
      } else if (c == ')' || c == ']' || c == '}') {
        if (--depth == 0) {
          close = i;
          break;
        }
      }
    }
    if (close == snippet.size() - 1) return std::string(function_name) + std::string(snippet);
  }
  return std::string(function_name) + "(" + std::string(snippet) + ")";
}

std::string format_test_inputs(std::string_view function_name, const std::vector<std::string>& inputs) {
  std::string out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + call_expression(function_name, inputs[i]);
  }
  return out;
}

std::string format_assertions(const OracleSet& oracles) {
  std::string out;
  for (std::size_t i = 0; i < oracles.assertions.size(); ++i) {
    if (i) out += '\n';
    out += oracles.assertions[i].source_text;
  }
  return out;
}

void to_json(nlohmann::json& j, const Assertion& a) {
  j = nlohmann::json{{"source_text", a.source_text}, {"input_index", a.input_index}, {"origin", a.origin}};
}

void from_json(const nlohmann::json& j, Assertion& a) {
  a.source_text = j.at("source_text").get<std::string>();
  a.input_index = j.at("input_index").get<std::size_t>();
  a.origin = j.at("origin").get<std::string>();
}

void to_json(nlohmann::json& j, const OracleSet& o) {
  j = nlohmann::json{{"task_id", o.task_id}, {"assertions", o.assertions}};
}

void from_json(const nlohmann::json& j, OracleSet& o) {
  o.task_id = j.at("task_id").get<std::string>();
  o.assertions = j.at("assertions").get<std::vector<Assertion>>();
}

}  // namespace oracle_forge
