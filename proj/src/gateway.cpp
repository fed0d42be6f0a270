#include "oracle_forge/gateway.hpp"

#include "oracle_forge/fs_util.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace oracle_forge {

namespace {

constexpr std::string_view kCacheMagic = "oracle-forge-cache/1";

std::string hex_sha256(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void validate_request(const ChatRequest& r) {
  if (r.system_text.empty() || r.user_text.empty()) {
    throw ConfigError("chat request '" + r.request_tag + "' has empty system or user text");
  }
  if (!(r.temperature >= 0.0 && r.temperature <= 1.0)) {
    throw ConfigError("temperature must lie in [0, 1]");
  }
  if (r.max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
}

}  // namespace

std::string cache_key(const ChatRequest& request) {
  nlohmann::json material = nlohmann::json::array({request.provider_id, request.model_id,
                                                   request.temperature, request.system_text,
                                                   request.user_text, request.max_output_tokens});
  return hex_sha256(material.dump());
}

std::string content_digest(std::string_view text) { return hex_sha256(text); }

bool tag_matches(std::string_view pattern, std::string_view tag) {
  // Iterative glob with single-star backtracking.
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < tag.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == tag[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

ProviderScript ProviderScript::from_json(const nlohmann::json& j) {
  ProviderScript script;
  const auto& rules = j.is_array() ? j : j.at("rules");
  for (const auto& r : rules) {
    ScriptRule rule;
    rule.tag_pattern = r.at("tag").get<std::string>();
    if (auto it = r.find("contains"); it != r.end() && !it->is_null()) {
      rule.user_contains = it->get<std::string>();
    }
    rule.reply_text = r.at("reply").get<std::string>();
    if (auto it = r.find("times"); it != r.end() && !it->is_null()) rule.times = it->get<int>();
    script.rules.push_back(std::move(rule));
  }
  return script;
}

ProviderScript ProviderScript::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read provider script " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed provider script " + path.string() + ": " + e.what());
  }
}

nlohmann::json ProviderScript::to_json() const {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : this->rules) {
    nlohmann::json j{{"tag", r.tag_pattern}, {"reply", r.reply_text}};
    if (r.user_contains) j["contains"] = *r.user_contains;
    if (r.times) j["times"] = *r.times;
    rules.push_back(std::move(j));
  }
  return nlohmann::json{{"rules", std::move(rules)}};
}

ScriptedProvider::ScriptedProvider(ProviderScript script)
    : script_(std::move(script)), used_(script_.rules.size(), 0) {}

std::string ScriptedProvider::send(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  ++calls_;
  bool exhausted = false;
  for (std::size_t i = 0; i < script_.rules.size(); ++i) {
    const auto& rule = script_.rules[i];
    if (!tag_matches(rule.tag_pattern, request.request_tag)) continue;
    if (rule.user_contains && request.user_text.find(*rule.user_contains) == std::string::npos) continue;
    if (rule.times && used_[i] >= *rule.times) {
      exhausted = true;
      continue;
    }
    ++used_[i];
    return rule.reply_text;
  }
  throw ScriptMissError(std::string(exhausted ? "exhausted" : "no") + " script rule for request tag '" +
                        request.request_tag + "'");
}

std::size_t ScriptedProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

HttpProvider::HttpProvider(HttpProviderOptions options) : options_(std::move(options)) {
  if (options_.base_url.empty()) throw ConfigError("live provider requires a base URL");
}

nlohmann::json HttpProvider::request_body(const ChatRequest& request) {
  return nlohmann::json{{"model", request.model_id},
                        {"messages", nlohmann::json::array({
                                         {{"role", "system"}, {"content", request.system_text}},
                                         {{"role", "user"}, {"content", request.user_text}},
                                     })},
                        {"temperature", request.temperature},
                        {"max_tokens", request.max_output_tokens}};
}

std::string HttpProvider::parse_reply(const std::string& body) {
  try {
    auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderFailure(std::string("malformed chat-completions response: ") + e.what(), 200, false);
  }
}

std::string HttpProvider::send(const ChatRequest& request) {
  // Split "scheme://host[:port]/prefix" into the client origin and a path prefix.
  const auto& url = options_.base_url;
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto result = client.Post(prefix + "/chat/completions", headers, request_body(request).dump(),
                            "application/json");
  if (!result) {
    throw ProviderFailure("transport error: " + httplib::to_string(result.error()), 0, true);
  }
  int status = result->status;
  if (status >= 400) {
    bool retryable = status == 429 || status >= 500;
    throw ProviderFailure("HTTP " + std::to_string(status) + ": " + result->body.substr(0, 500), status,
                          retryable);
  }
  return parse_reply(result->body);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string());
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const { return dir_ / (key + ".txt"); }

bool ResponseCache::contains(const std::string& key) const { return std::filesystem::exists(path_for(key)); }

std::string ResponseCache::encode(const ChatRequest& request, const std::string& reply) {
  std::string out(kCacheMagic);
  out += "\nkey: " + cache_key(request);
  out += "\nprovider: " + request.provider_id;
  out += "\nmodel: " + request.model_id;
  out += "\ntag: " + request.request_tag;
  out += "\nreply-bytes: " + std::to_string(reply.size());
  out += "\n\n";
  out += reply;
  return out;
}

std::string ResponseCache::decode(const std::string& contents) {
  if (contents.rfind(kCacheMagic, 0) != 0) throw Error("cache entry lacks header");
  auto split = contents.find("\n\n");
  if (split == std::string::npos) throw Error("cache entry header not terminated");
  std::string reply = contents.substr(split + 2);
  auto bytes_at = contents.find("\nreply-bytes: ");
  if (bytes_at != std::string::npos && bytes_at < split) {
    auto expected = std::stoull(contents.substr(bytes_at + 14, split - bytes_at - 14));
    if (expected != reply.size()) throw Error("cache entry truncated");
  }
  return reply;
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return decode(read_file(path));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::store(const std::string& key, const ChatRequest& request, const std::string& reply) const {
  write_file_atomic(path_for(key), encode(request, reply));
}

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
  if (options_.cache_dir) cache_.emplace(*options_.cache_dir);
  if (options_.mirror_dir) mirror_.emplace(*options_.mirror_dir);
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (options_.cache_only && !cache_) throw ConfigError("cache-only gateway requires a cache directory");
  if (!options_.cache_only && !provider_) throw ConfigError("gateway requires a provider or cache-only mode");
  if (options_.retry.max_attempts < 1) throw ConfigError("retry policy needs at least one attempt");
}

bool Gateway::has_live_provider() const { return provider_ && provider_->is_live() && !options_.cache_only; }

std::string Gateway::call_with_retry(const ChatRequest& request, int& attempts) {
  for (attempts = 1;; ++attempts) {
    auto issued = provider_calls_.fetch_add(1);
    if (options_.call_budget != 0 && issued >= options_.call_budget) {
      provider_calls_.fetch_sub(1);
      throw BudgetError("per-run call budget of " + std::to_string(options_.call_budget) + " exhausted");
    }
    try {
      return provider_->send(request);
    } catch (const ProviderFailure& failure) {
      if (!failure.retryable() || attempts >= options_.retry.max_attempts) {
        throw ProviderFailure("provider failed after " + std::to_string(attempts) + " attempt(s): " + failure.what(),
                              failure.http_status(), failure.retryable());
      }
      const auto& backoff = options_.retry.backoff;
      if (!backoff.empty()) {
        auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempts - 1), backoff.size() - 1);
        options_.sleep(backoff[idx]);
      }
    }
  }
}

ChatExchange Gateway::complete(const ChatRequest& request) {
  validate_request(request);
  ChatExchange exchange;
  exchange.request = request;
  exchange.cache_key = cache_key(request);
  auto started = std::chrono::steady_clock::now();

  std::optional<std::string> cached;
  if (cache_) cached = cache_->lookup(exchange.cache_key);
  if (cached) {
    exchange.reply_text = std::move(*cached);
    exchange.cache_hit = true;
    cache_hits_.fetch_add(1);
  } else {
    if (options_.cache_only) throw CacheMissError(exchange.cache_key, request.request_tag);
    exchange.reply_text = call_with_retry(request, exchange.attempt_count);
    if (cache_) cache_->store(exchange.cache_key, request, exchange.reply_text);
  }
  if (mirror_ && !mirror_->contains(exchange.cache_key)) {
    mirror_->store(exchange.cache_key, request, exchange.reply_text);
  }
  exchange.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  return exchange;
}

void to_json(nlohmann::json& j, const ChatRequest& r) {
  j = nlohmann::json{{"provider_id", r.provider_id},         {"model_id", r.model_id},
                     {"system_text", r.system_text},         {"user_text", r.user_text},
                     {"temperature", r.temperature},         {"max_output_tokens", r.max_output_tokens},
                     {"request_tag", r.request_tag}};
}

void from_json(const nlohmann::json& j, ChatRequest& r) {
  r.provider_id = j.at("provider_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.system_text = j.at("system_text").get<std::string>();
  r.user_text = j.at("user_text").get<std::string>();
  r.temperature = j.at("temperature").get<double>();
  r.max_output_tokens = j.at("max_output_tokens").get<int>();
  r.request_tag = j.at("request_tag").get<std::string>();
}

void to_json(nlohmann::json& j, const ChatExchange& e) {
  j = nlohmann::json{{"request_tag", e.request.request_tag},
                     {"provider_id", e.request.provider_id},
                     {"model_id", e.request.model_id},
                     {"temperature", e.request.temperature},
                     {"max_output_tokens", e.request.max_output_tokens},
                     {"cache_key", e.cache_key},
                     {"cache_hit", e.cache_hit},
                     {"attempt_count", e.attempt_count},
                     {"latency_ms", e.latency_ms}};
}

void from_json(const nlohmann::json& j, ChatExchange& e) {
  e.request.request_tag = j.at("request_tag").get<std::string>();
  e.request.provider_id = j.at("provider_id").get<std::string>();
  e.request.model_id = j.at("model_id").get<std::string>();
  e.request.temperature = j.at("temperature").get<double>();
  e.request.max_output_tokens = j.at("max_output_tokens").get<int>();
  e.cache_key = j.at("cache_key").get<std::string>();
  e.cache_hit = j.at("cache_hit").get<bool>();
  e.attempt_count = j.at("attempt_count").get<int>();
  e.latency_ms = j.at("latency_ms").get<std::int64_t>();
}

}  // namespace oracle_forge
