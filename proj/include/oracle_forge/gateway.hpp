#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracle_forge/errors.hpp"

namespace oracle_forge {

inline constexpr int kDefaultMaxOutputTokens = 4096;

struct ChatRequest {
  std::string provider_id;
  std::string model_id;
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = kDefaultMaxOutputTokens;
  // Pipeline stage label such as "panelist:edge_case_specialist". Not part of the cache key.
  std::string request_tag;
};

struct ChatExchange {
  ChatRequest request;
  std::string reply_text;
  std::string cache_key;
  std::int64_t latency_ms = 0;
  bool cache_hit = false;
  int attempt_count = 1;
};

// Hex SHA-256 over (provider_id, model_id, temperature, system_text, user_text,
// max_output_tokens).
std::string cache_key(const ChatRequest& request);

// Hex SHA-256 of arbitrary text.
std::string content_digest(std::string_view text);

// A provider failure. `retryable` marks transport errors, HTTP 429 and 5xx.
class ProviderFailure : public ProviderError {
 public:
  ProviderFailure(const std::string& what, int http_status, bool retryable)
      : ProviderError(what), http_status_(http_status), retryable_(retryable) {}
  int http_status() const noexcept { return http_status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int http_status_;
  bool retryable_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  // Returns the reply text or throws ProviderFailure / ScriptMissError.
  virtual std::string send(const ChatRequest& request) = 0;
  virtual bool is_live() const { return true; }
};

// Glob over request tags; '*' matches any run of characters.
bool tag_matches(std::string_view pattern, std::string_view tag);

struct ScriptRule {
  std::string tag_pattern;
  std::optional<std::string> user_contains;
  std::string reply_text;
  // How many requests this rule may answer; nullopt is unlimited.
  std::optional<int> times;
};

struct ProviderScript {
  std::vector<ScriptRule> rules;

  static ProviderScript from_json(const nlohmann::json& j);
  static ProviderScript load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// Deterministic offline provider: first matching rule with remaining uses wins.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(ProviderScript script);
  std::string send(const ChatRequest& request) override;
  bool is_live() const override { return false; }
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  ProviderScript script_;
  std::vector<int> used_;
  std::size_t calls_ = 0;
};

struct HttpProviderOptions {
  // e.g. "https://api.openai.com/v1"; requests go to <base_url>/chat/completions.
  std::string base_url;
  std::string api_key;
  std::chrono::seconds timeout{120};
};

// Chat-completions endpoint client: {model, messages:[system,user], temperature, max_tokens}.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderOptions options);
  std::string send(const ChatRequest& request) override;

  static nlohmann::json request_body(const ChatRequest& request);
  // Extracts choices[0].message.content; throws ProviderFailure on malformed bodies.
  static std::string parse_reply(const std::string& body);

 private:
  HttpProviderOptions options_;
};

// Content-addressed reply store: one <key>.txt per exchange, metadata header then reply.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const ChatRequest& request, const std::string& reply) const;
  bool contains(const std::string& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

  static std::string encode(const ChatRequest& request, const std::string& reply);
  // Returns the reply part of an encoded entry; throws Error on a bad header.
  static std::string decode(const std::string& contents);

 private:
  std::filesystem::path path_for(const std::string& key) const;
  std::filesystem::path dir_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(4000)};
};

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;
  // Replay mode: never reach the provider; a miss raises CacheMissError.
  bool cache_only = false;
  RetryPolicy retry;
  // Ceiling on provider calls (cache hits are free). Zero disables the ceiling.
  std::size_t call_budget = 0;
  // Every exchange served is also copied here (the run record's exchange store).
  std::optional<std::filesystem::path> mirror_dir;
  std::function<void(std::chrono::milliseconds)> sleep;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Provider> provider, GatewayOptions options);

  ChatExchange complete(const ChatRequest& request);

  std::size_t provider_calls() const noexcept { return provider_calls_.load(); }
  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  bool has_live_provider() const;

 private:
  std::string call_with_retry(const ChatRequest& request, int& attempts);

  std::shared_ptr<Provider> provider_;
  GatewayOptions options_;
  std::optional<ResponseCache> cache_;
  std::optional<ResponseCache> mirror_;
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

void to_json(nlohmann::json& j, const ChatRequest& r);
void from_json(const nlohmann::json& j, ChatRequest& r);

// Exchange metadata as persisted in run records. Prompt and reply texts are omitted; the
// reply lives in the exchange store under `cache_key`.
void to_json(nlohmann::json& j, const ChatExchange& e);
void from_json(const nlohmann::json& j, ChatExchange& e);

}  // namespace oracle_forge
