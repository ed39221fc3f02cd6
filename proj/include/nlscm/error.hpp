#pragma once

#include <stdexcept>
#include <string>

namespace nlscm {

/// Process exit codes shared by the CLI and the acceptance runner.
enum class ExitCode : int { ok = 0, config_error = 2, numeric_failure = 3, acceptance_failure = 4 };

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag written into failure records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }
  virtual ExitCode exit_code() const noexcept { return ExitCode::numeric_failure; }

 private:
  std::string kind_;
};

/// Invalid user input or configuration (bad field, bad exponent, bad grid).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg, std::string field = {})
      : Error("config", msg), field_(std::move(field)) {}
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string kind, const std::string& msg) : Error(std::move(kind), msg) {}
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
};

class IncompatibleGrid : public Error {
 public:
  explicit IncompatibleGrid(const std::string& msg) : Error("incompatible-grid", msg) {}
};

/// A modelling hypothesis does not hold for the supplied data, e.g. the
/// potential does not have exactly one negative eigenvalue.
class HypothesisViolation : public Error {
 public:
  HypothesisViolation(std::string hypothesis, const std::string& msg)
      : Error("hypothesis-violation", hypothesis + ": " + msg), hypothesis_(std::move(hypothesis)) {}
  const std::string& hypothesis() const noexcept { return hypothesis_; }

 private:
  std::string hypothesis_;
};

class NumericError : public Error {
 public:
  NumericError(std::string kind, const std::string& msg) : Error(std::move(kind), msg) {}
};

class OutOfRange : public Error {
 public:
  explicit OutOfRange(const std::string& msg) : Error("out-of-range", msg) {}
};

/// Continuation stopped; `last_good_a` is the largest amplitude accepted.
class BranchTermination : public Error {
 public:
  BranchTermination(double last_good_a, const std::string& msg)
      : Error("branch-termination", msg), last_good_a_(last_good_a) {}
  double last_good_a() const noexcept { return last_good_a_; }

 private:
  double last_good_a_;
};

class WindowViolation : public Error {
 public:
  explicit WindowViolation(const std::string& msg) : Error("window-violation", msg) {}
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& msg) : Error("insufficient-data", msg) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

}  // namespace nlscm
