#include "oracle_forge/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <thread>

namespace oracle_forge {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kStderrCap = 64 * 1024;
// Interpreter start-up is not charged to the first assertion of a runner.
constexpr std::chrono::milliseconds kStartupAllowance{1000};

constexpr std::pair<VerdictStatus, std::string_view> kStatusNames[] = {
    {VerdictStatus::pass, "pass"},
    {VerdictStatus::assertion_failed, "assertion_failed"},
    {VerdictStatus::runtime_error, "runtime_error"},
    {VerdictStatus::timeout, "timeout"},
    {VerdictStatus::parse_error, "parse_error"},
    {VerdictStatus::not_executed, "not_executed"},
    {VerdictStatus::candidate_error, "candidate_error"},
};

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::max(0.0, std::chrono::duration<double, std::milli>(b - a).count());
}

std::string truncate_message(std::string message) {
  if (message.size() > kMaxErrorMessage) message.resize(kMaxErrorMessage);
  return message;
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class TempDir {
 public:
  TempDir() {
    auto pattern = (std::filesystem::temp_directory_path() / "oracle-forge-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw RunnerSpawnError("cannot create sandbox directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read, write;
  Pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw RunnerSpawnError(std::string("pipe: ") + std::strerror(errno));
    read = Fd(fds[0]);
    write = Fd(fds[1]);
  }
};

// Best effort; used between fork and exec, so raw syscalls only.
void write_proc(const char* path, std::string_view text) {
  int fd = ::open(path, O_WRONLY | O_CLOEXEC);
  if (fd < 0) return;
  [[maybe_unused]] auto n = ::write(fd, text.data(), text.size());
  ::close(fd);
}

// A live runner process; killed and reaped on destruction.
class RunnerProcess {
 public:
  RunnerProcess(const SandboxOptions& options, const ExecLimits& limits, const std::filesystem::path& workdir) {
    if (options.runner_command.empty()) throw RunnerSpawnError("no runner command configured");
    std::vector<std::string> env_storage = {
        "PATH=" + std::string(std::getenv("PATH") ? std::getenv("PATH") : "/usr/bin:/bin"),
        "HOME=" + workdir.string(),
        "TMPDIR=" + workdir.string(),
        "LANG=C.UTF-8",
        "PYTHONDONTWRITEBYTECODE=1",
        "PYTHONHASHSEED=0",
        "PYTHONIOENCODING=utf-8",
    };
    std::vector<char*> argv, envp;
    for (const auto& a : options.runner_command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    for (auto& e : env_storage) envp.push_back(e.data());
    envp.push_back(nullptr);
    const std::string dir = workdir.string();
    const rlim_t memory = static_cast<rlim_t>(limits.memory_limit_mb) * 1024 * 1024;
    const bool isolate = options.isolate_network;
    // Identity maps for the new user namespace; without them the runner becomes the overflow
    // uid and loses access to files its caller can read.
    const std::string uid_map = std::to_string(::getuid()) + " " + std::to_string(::getuid()) + " 1\n";
    const bool privileged = ::geteuid() == 0;
    const std::string gid_map = std::to_string(::getgid()) + " " + std::to_string(::getgid()) + " 1\n";

    Pipe in, out, err, status;
    pid_ = ::fork();
    if (pid_ < 0) throw RunnerSpawnError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      // Child: async-signal-safe calls only.
      ::setpgid(0, 0);
      // A privileged caller can drop the network directly; a user namespace would also cost it
      // DAC override on files owned by unmapped users.
      if (isolate && (privileged ? ::unshare(CLONE_NEWNET) : -1) != 0 &&
          ::unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0) {
        write_proc("/proc/self/setgroups", "deny");
        write_proc("/proc/self/uid_map", uid_map);
        write_proc("/proc/self/gid_map", gid_map);
      }
      struct rlimit mem{memory, memory};
      ::setrlimit(RLIMIT_AS, &mem);
      struct rlimit core{0, 0};
      ::setrlimit(RLIMIT_CORE, &core);
      if (::chdir(dir.c_str()) != 0) ::_exit(126);
      ::dup2(in.read.get(), 0);
      ::dup2(out.write.get(), 1);
      ::dup2(err.write.get(), 2);
      ::execvpe(argv[0], argv.data(), envp.data());
      int code = errno;
      [[maybe_unused]] auto n = ::write(status.write.get(), &code, sizeof code);
      ::_exit(127);
    }
    ::setpgid(pid_, pid_);
    status.write.reset();
    int code = 0;
    ssize_t got;
    do {
      got = ::read(status.read.get(), &code, sizeof code);
    } while (got < 0 && errno == EINTR);
    if (got == static_cast<ssize_t>(sizeof code)) {
      reap(true);
      throw RunnerSpawnError("cannot exec runner '" + options.runner_command.front() + "': " + std::strerror(code));
    }
    stdin_ = std::move(in.write);
    stdout_ = std::move(out.read);
    stderr_ = std::move(err.read);
    ::fcntl(stdin_.get(), F_SETFL, O_NONBLOCK);
  }

  ~RunnerProcess() { reap(true); }
  RunnerProcess(const RunnerProcess&) = delete;
  RunnerProcess& operator=(const RunnerProcess&) = delete;

  Fd& in() { return stdin_; }
  Fd& out() { return stdout_; }
  Fd& err() { return stderr_; }

  // Gives the process `grace` to exit on its own, then kills the group. Returns the wait status.
  int finish(std::chrono::milliseconds grace) {
    if (pid_ <= 0) return wait_status_;
    auto until = Clock::now() + grace;
    while (Clock::now() < until) {
      pid_t r = ::waitpid(pid_, &wait_status_, WNOHANG);
      if (r == pid_) {
        ::kill(-r, SIGKILL);
        pid_ = -1;
        return wait_status_;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    return reap(true);
  }

  // Kills the process group when `kill` is set, then waits. Returns the raw wait status.
  int reap(bool kill) {
    if (pid_ <= 0) return wait_status_;
    if (kill) {
      ::kill(-pid_, SIGKILL);
      ::kill(pid_, SIGKILL);
    }
    while (::waitpid(pid_, &wait_status_, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
    return wait_status_;
  }

 private:
  pid_t pid_ = -1;
  int wait_status_ = 0;
  Fd stdin_, stdout_, stderr_;
};

enum class AttemptEnd { summary, assertion_timeout, batch_timeout, eof };

struct Attempt {
  AttemptEnd end = AttemptEnd::eof;
  std::size_t next = 0;  // first absolute index without a verdict
  bool candidate_loaded = true;
  std::optional<std::string> load_error;
  std::string stderr_text;
  double stalled_ms = 0;
};

Verdict parse_verdict_line(const nlohmann::json& j, const std::string& raw) {
  try {
    Verdict v;
    v.input_index = j.at("index").get<std::size_t>();
    v.status = verdict_status_from_string(j.at("status").get<std::string>());
    if (v.status != VerdictStatus::pass && v.status != VerdictStatus::assertion_failed &&
        v.status != VerdictStatus::runtime_error && v.status != VerdictStatus::parse_error) {
      throw ProtocolError("runner emitted orchestrator-only status", raw);
    }
    const auto& type = j.at("error_type");
    const auto& message = j.at("error_message");
    if (!type.is_null()) v.error_type = type.get<std::string>();
    if (!message.is_null()) v.error_message = truncate_message(message.get<std::string>());
    v.elapsed_ms = j.at("elapsed_ms").get<double>();
    if (v.elapsed_ms < 0) throw ProtocolError("negative elapsed_ms", raw);
    if (v.status == VerdictStatus::pass) {
      v.error_type.reset();
      v.error_message.reset();
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed verdict line: ") + e.what(), raw);
  } catch (const Error& e) {
    if (dynamic_cast<const ProtocolError*>(&e)) throw;
    throw ProtocolError(e.what(), raw);
  }
}

}  // namespace

void ExecLimits::check() const {
  if (timeout_ms <= 0 || total_timeout_ms <= 0 || memory_limit_mb <= 0) {
    throw ConfigError("execution limits must be positive");
  }
  if (total_timeout_ms < timeout_ms) throw ConfigError("total timeout must be at least the per-assertion timeout");
}

std::string_view to_string(VerdictStatus status) {
  for (const auto& [s, name] : kStatusNames) {
    if (s == status) return name;
  }
  return "unknown";
}

VerdictStatus verdict_status_from_string(std::string_view name) {
  for (const auto& [s, n] : kStatusNames) {
    if (n == name) return s;
  }
  throw Error("unknown verdict status: " + std::string(name));
}

std::vector<FailedOracle> failed_subset(const ValidationReport& report, const OracleSet& oracles) {
  std::vector<FailedOracle> out;
  for (const auto& v : report.verdicts) {
    if (v.passed()) continue;
    if (v.input_index >= oracles.assertions.size()) continue;
    out.push_back({v.input_index, oracles.assertions[v.input_index], v});
  }
  std::sort(out.begin(), out.end(),
            [](const FailedOracle& a, const FailedOracle& b) { return a.input_index < b.input_index; });
  return out;
}

nlohmann::json runner_job(std::string_view source, std::string_view function_name,
                          const std::vector<std::string>& assertions, int timeout_ms) {
  return nlohmann::json{{"candidate_code", source},
                        {"function_name", function_name},
                        {"assertions", assertions},
                        {"timeout_ms", timeout_ms}};
}

struct Sandbox::Slot {
  explicit Slot(Pool& pool) : pool_(pool) {
    std::unique_lock lock(pool_.mutex);
    pool_.cv.wait(lock, [&] { return pool_.available > 0; });
    --pool_.available;
  }
  ~Slot() {
    {
      std::lock_guard lock(pool_.mutex);
      ++pool_.available;
    }
    pool_.cv.notify_one();
  }
  Pool& pool_;
};

Sandbox::Sandbox(SandboxOptions options) : options_(std::move(options)), pool_(std::make_shared<Pool>()) {
  if (options_.runner_command.empty()) throw ConfigError("sandbox requires a runner command");
  unsigned workers = options_.workers ? options_.workers : std::max(1u, std::thread::hardware_concurrency());
  pool_->available = workers;
  ignore_sigpipe();
}

std::vector<Verdict> Sandbox::execute(std::string_view source, std::string_view function_name,
                                      const std::vector<std::string>& assertions, const ExecLimits& limits) const {
  limits.check();
  const std::size_t n = assertions.size();
  std::vector<std::optional<Verdict>> verdicts(n);
  if (n == 0) return {};

  Slot slot(*pool_);
  const auto started = Clock::now();
  const auto batch_deadline = started + std::chrono::milliseconds(limits.total_timeout_ms);
  const auto per_assertion = std::chrono::milliseconds(limits.timeout_ms);

  // Each attempt runs assertions [offset, n) in a fresh runner; a hang or crash at index k
  // resumes from k + 1 so every assertion receives exactly one verdict.
  std::size_t offset = 0;
  while (offset < n && Clock::now() < batch_deadline) {
    std::vector<std::string> slice(assertions.begin() + static_cast<std::ptrdiff_t>(offset), assertions.end());
    const std::string job = runner_job(source, function_name, slice, limits.timeout_ms).dump();

    TempDir workdir;
    RunnerProcess proc(options_, limits, workdir.path());
    Attempt attempt;
    attempt.next = offset;
    std::size_t written = 0;
    std::string out_buf;
    std::size_t out_total = 0;
    auto last_progress = Clock::now() + kStartupAllowance;
    bool out_open = true, err_open = true;

    auto handle_line = [&](const std::string& raw) {
      if (raw.find_first_not_of(" \t\r") == std::string::npos) return;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(raw);
      } catch (const nlohmann::json::exception&) {
        throw ProtocolError("runner emitted a non-JSON line", raw);
      }
      if (!j.is_object()) throw ProtocolError("runner emitted a non-object line", raw);
      if (auto it = j.find("summary"); it != j.end()) {
        try {
          attempt.candidate_loaded = it->at("candidate_loaded").get<bool>();
          const auto& err = it->at("load_error");
          if (!err.is_null()) attempt.load_error = err.get<std::string>();
          (void)it->at("executed").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
          throw ProtocolError(std::string("malformed summary: ") + e.what(), raw);
        }
        attempt.end = AttemptEnd::summary;
        return;
      }
      if (attempt.end == AttemptEnd::summary) throw ProtocolError("verdict after summary line", raw);
      auto v = parse_verdict_line(j, raw);
      if (v.input_index != attempt.next - offset) throw ProtocolError("verdict index out of order", raw);
      v.input_index = attempt.next;
      if (attempt.next >= n) throw ProtocolError("more verdicts than assertions", raw);
      verdicts[attempt.next] = std::move(v);
      ++attempt.next;
      last_progress = Clock::now();
    };

    bool finished = false;
    while (!finished) {
      auto now = Clock::now();
      auto deadline = std::min(last_progress + per_assertion, batch_deadline);
      if (now >= deadline) {
        attempt.end = deadline == batch_deadline ? AttemptEnd::batch_timeout : AttemptEnd::assertion_timeout;
        attempt.stalled_ms = ms_between(last_progress, now);
        break;
      }
      pollfd fds[3];
      nfds_t count = 0;
      int in_slot = -1, out_slot = -1, err_slot = -1;
      if (proc.in()) {
        in_slot = static_cast<int>(count);
        fds[count++] = {proc.in().get(), POLLOUT, 0};
      }
      if (out_open) {
        out_slot = static_cast<int>(count);
        fds[count++] = {proc.out().get(), POLLIN, 0};
      }
      if (err_open) {
        err_slot = static_cast<int>(count);
        fds[count++] = {proc.err().get(), POLLIN, 0};
      }
      if (!out_open) break;
      auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
      int ready = ::poll(fds, count, static_cast<int>(wait_ms));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("poll: ") + std::strerror(errno));
      }
      if (in_slot >= 0 && fds[in_slot].revents) {
        if (fds[in_slot].revents & (POLLERR | POLLHUP)) {
          proc.in().reset();
        } else {
          auto w = ::write(proc.in().get(), job.data() + written, job.size() - written);
          if (w > 0) written += static_cast<std::size_t>(w);
          if ((w < 0 && errno != EAGAIN && errno != EINTR) || written == job.size()) proc.in().reset();
        }
      }
      if (err_slot >= 0 && fds[err_slot].revents) {
        char buf[4096];
        auto r = ::read(proc.err().get(), buf, sizeof buf);
        if (r > 0) {
          if (attempt.stderr_text.size() < kStderrCap) attempt.stderr_text.append(buf, static_cast<std::size_t>(r));
        } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
          err_open = false;
        }
      }
      if (out_slot >= 0 && fds[out_slot].revents) {
        char buf[65536];
        auto r = ::read(proc.out().get(), buf, sizeof buf);
        if (r > 0) {
          out_total += static_cast<std::size_t>(r);
          if (out_total > options_.max_stdout_bytes) {
            throw ProtocolError("runner stdout exceeded cap", out_buf.substr(0, 512));
          }
          out_buf.append(buf, static_cast<std::size_t>(r));
          std::size_t nl;
          while ((nl = out_buf.find('\n')) != std::string::npos) {
            std::string line = out_buf.substr(0, nl);
            out_buf.erase(0, nl + 1);
            handle_line(line);
          }
        } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
          out_open = false;
          if (!out_buf.empty()) {
            handle_line(out_buf);
            out_buf.clear();
          }
          finished = true;
        }
      }
    }

    bool hung = attempt.end == AttemptEnd::assertion_timeout || attempt.end == AttemptEnd::batch_timeout;
    int status = 0;
    if (hung || out_open) {
      status = proc.reap(true);
    } else {
      // Collect the rest of stderr for crash diagnostics before reaping.
      auto drain_until = Clock::now() + std::chrono::milliseconds(500);
      while (err_open && Clock::now() < drain_until) {
        pollfd pfd{proc.err().get(), POLLIN, 0};
        if (::poll(&pfd, 1, 50) <= 0) continue;
        char buf[4096];
        auto r = ::read(proc.err().get(), buf, sizeof buf);
        if (r <= 0) {
          err_open = false;
        } else if (attempt.stderr_text.size() < kStderrCap) {
          attempt.stderr_text.append(buf, static_cast<std::size_t>(r));
        }
      }
      status = proc.finish(std::chrono::milliseconds(1000));
    }

    switch (attempt.end) {
      case AttemptEnd::summary:
        if (!attempt.candidate_loaded) {
          if (attempt.next != offset) throw ProtocolError("verdicts emitted for an unloaded candidate", "");
          for (std::size_t i = offset; i < n; ++i) {
            Verdict v;
            v.input_index = i;
            v.status = VerdictStatus::candidate_error;
            v.error_type = "CandidateLoadError";
            v.error_message = truncate_message(attempt.load_error.value_or("candidate failed to load"));
            verdicts[i] = std::move(v);
          }
          offset = n;
        } else if (attempt.next != n) {
          throw ProtocolError("summary arrived before all verdicts", "");
        } else {
          offset = n;
        }
        break;
      case AttemptEnd::assertion_timeout: {
        Verdict v;
        v.input_index = attempt.next;
        v.status = VerdictStatus::timeout;
        v.error_type = "Timeout";
        v.error_message = "assertion exceeded " + std::to_string(limits.timeout_ms) + " ms";
        v.elapsed_ms = attempt.stalled_ms;
        verdicts[attempt.next] = std::move(v);
        offset = attempt.next + 1;
        break;
      }
      case AttemptEnd::batch_timeout:
        offset = n;
        break;
      case AttemptEnd::eof: {
        if (attempt.next >= n) {
          offset = n;
          break;
        }
        Verdict v;
        v.input_index = attempt.next;
        v.status = VerdictStatus::runtime_error;
        v.error_type = "RunnerCrashed";
        std::string why = WIFSIGNALED(status) ? "runner killed by signal " + std::to_string(WTERMSIG(status))
                                              : "runner exited with status " + std::to_string(WEXITSTATUS(status));
        if (!attempt.stderr_text.empty()) why += ": " + attempt.stderr_text;
        v.error_message = truncate_message(why);
        v.elapsed_ms = ms_between(last_progress, Clock::now());
        verdicts[attempt.next] = std::move(v);
        offset = attempt.next + 1;
        break;
      }
    }
  }

  std::vector<Verdict> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (verdicts[i]) {
      out.push_back(std::move(*verdicts[i]));
    } else {
      Verdict v;
      v.input_index = i;
      v.status = VerdictStatus::not_executed;
      v.error_message = "batch timeout of " + std::to_string(limits.total_timeout_ms) + " ms reached";
      out.push_back(std::move(v));
    }
  }
  return out;
}

ValidationReport Sandbox::validate(const CandidateCode& candidate, const OracleSet& oracles,
                                   const ExecLimits& limits) const {
  ValidationReport report;
  report.task_id = oracles.task_id;
  report.candidate_digest = content_digest(candidate.source_text);
  report.verdicts = execute(candidate.source_text, candidate.function_name, oracles.lines(), limits);
  report.all_pass = std::all_of(report.verdicts.begin(), report.verdicts.end(),
                                [](const Verdict& v) { return v.passed(); });
  return report;
}

std::string format_examples(const Task& task) {
  std::string out;
  for (std::size_t i = 0; i < task.test_inputs.size() && i < 3; ++i) {
    if (i) out += '\n';
    out += call_expression(task.function_name, task.test_inputs[i]);
  }
  return out;
}

CandidateOutcome generate_candidate(const Task& task, Gateway& gateway, const PromptLibrary& prompts,
                                    const ModelSettings& model, Transcript& transcript) {
  CandidateOutcome outcome;
  auto prompt = prompts.render(TemplateId::candidate_code, {{"task_description", task.description},
                                                             {"function_name", task.function_name},
                                                             {"test_examples", format_examples(task)}});
  auto attempt = [&](const RenderedPrompt& p, std::string tag) -> bool {
    auto exchange = gateway.complete(model.request(p, std::move(tag)));
    transcript.exchanges.push_back(exchange);
    try {
      auto source = extract_code_block(exchange.reply_text);
      if (!defines_function(source, task.function_name)) {
        outcome.diagnostics.push_back("candidate does not define " + task.function_name);
        return false;
      }
      outcome.code = CandidateCode{std::move(source), task.function_name, exchange.cache_key};
      return true;
    } catch (const NoCodeFoundError& e) {
      outcome.diagnostics.push_back(e.what());
      return false;
    }
  };
  if (!attempt(prompt, "candidate_code")) {
    auto retry = prompt;
    retry.user_text += "\n\nYour previous reply did not contain a complete definition of `" + task.function_name +
                       "`. Reply with the full implementation of `" + task.function_name +
                       "` in a single ```python code block.";
    if (!attempt(retry, "candidate_code:retry")) {
      outcome.diagnostics.push_back("candidate unavailable");
    }
  }
  for (const auto& d : outcome.diagnostics) transcript.note("candidate_code", d);
  return outcome;
}

void to_json(nlohmann::json& j, const Verdict& v) {
  j = nlohmann::json{{"input_index", v.input_index},
                     {"status", to_string(v.status)},
                     {"error_type", v.error_type ? nlohmann::json(*v.error_type) : nlohmann::json(nullptr)},
                     {"error_message", v.error_message ? nlohmann::json(*v.error_message) : nlohmann::json(nullptr)},
                     {"elapsed_ms", v.elapsed_ms}};
}

void from_json(const nlohmann::json& j, Verdict& v) {
  v.input_index = j.at("input_index").get<std::size_t>();
  v.status = verdict_status_from_string(j.at("status").get<std::string>());
  v.error_type.reset();
  v.error_message.reset();
  if (!j.at("error_type").is_null()) v.error_type = j.at("error_type").get<std::string>();
  if (!j.at("error_message").is_null()) v.error_message = j.at("error_message").get<std::string>();
  v.elapsed_ms = j.at("elapsed_ms").get<double>();
}

void to_json(nlohmann::json& j, const CandidateCode& c) {
  j = nlohmann::json{
      {"source_text", c.source_text}, {"function_name", c.function_name}, {"generation_key", c.generation_key}};
}

void from_json(const nlohmann::json& j, CandidateCode& c) {
  c.source_text = j.at("source_text").get<std::string>();
  c.function_name = j.at("function_name").get<std::string>();
  c.generation_key = j.at("generation_key").get<std::string>();
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = nlohmann::json{{"task_id", r.task_id},
                     {"candidate_digest", r.candidate_digest},
                     {"verdicts", r.verdicts},
                     {"all_pass", r.all_pass}};
}

void from_json(const nlohmann::json& j, ValidationReport& r) {
  r.task_id = j.at("task_id").get<std::string>();
  r.candidate_digest = j.at("candidate_digest").get<std::string>();
  r.verdicts = j.at("verdicts").get<std::vector<Verdict>>();
  r.all_pass = j.at("all_pass").get<bool>();
}

}  // namespace oracle_forge
