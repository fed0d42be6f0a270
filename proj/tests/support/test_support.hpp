#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracle_forge/fs_util.hpp"
#include "oracle_forge/gateway.hpp"
#include "oracle_forge/sandbox.hpp"

namespace oracle_forge::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(OF_FIXTURE_DIR) / name;
}

inline std::vector<std::string> stub_runner() { return {OF_PYTHON, OF_STUB_RUNNER}; }

// A runner defined inline: python3 -c <code>.
inline std::vector<std::string> inline_runner(const std::string& code) { return {OF_PYTHON, "-c", code}; }

inline Sandbox stub_sandbox(unsigned workers = 4) { return Sandbox(SandboxOptions{stub_runner(), workers, true, 16u << 20}); }

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag = "of") {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Counts sends and delegates; lets tests prove a path never reached the provider.
class CountingProvider : public Provider {
 public:
  explicit CountingProvider(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}
  std::string send(const ChatRequest& request) override {
    sends.fetch_add(1);
    return inner_->send(request);
  }
  bool is_live() const override { return inner_->is_live(); }
  std::atomic<std::size_t> sends{0};

 private:
  std::shared_ptr<Provider> inner_;
};

inline std::shared_ptr<ScriptedProvider> scripted(const std::string& fixture_name) {
  return std::make_shared<ScriptedProvider>(ProviderScript::load(fixture(fixture_name)));
}

inline ProviderScript script_of(std::vector<ScriptRule> rules) {
  ProviderScript s;
  s.rules = std::move(rules);
  return s;
}

inline GatewayOptions no_cache_options() {
  GatewayOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

}  // namespace oracle_forge::testing
