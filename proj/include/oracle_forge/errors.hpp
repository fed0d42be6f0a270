#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace oracle_forge {

// Base of every error the engine raises. Commands map subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate task_id: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  using Error::Error;
};

// The scripted mock has no rule for a request: a fixture gap, not a provider fault.
class ScriptMissError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class CacheMissError : public Error {
 public:
  explicit CacheMissError(const std::string& key, const std::string& tag)
      : Error("no cached exchange for key " + key + " (" + tag + ")"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class MissingBindingError : public Error {
 public:
  explicit MissingBindingError(const std::string& placeholder)
      : Error("missing binding: " + placeholder), placeholder_(placeholder) {}
  const std::string& placeholder() const noexcept { return placeholder_; }

 private:
  std::string placeholder_;
};

class UnknownTemplateError : public Error {
 public:
  using Error::Error;
};

class NoCodeFoundError : public Error {
 public:
  using Error::Error;
};

class RunnerSpawnError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw)
      : Error(what + " (raw: " + raw.substr(0, 512) + ")"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class MissingCanonicalError : public Error {
 public:
  explicit MissingCanonicalError(const std::string& task_id)
      : Error("task " + task_id + " has no canonical_solution") {}
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class NoBuggyVariantsError : public Error {
 public:
  explicit NoBuggyVariantsError(const std::string& task_id)
      : Error("task " + task_id + " has no buggy_variants") {}
};

class NoFailingOracleError : public Error {
 public:
  using Error::Error;
};

class SchemaVersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace oracle_forge
