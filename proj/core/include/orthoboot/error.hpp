#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace orthoboot {

enum class ErrorCategory {
  invalid_argument,
  degenerate,
  convergence,
  io,
  config,
  internal,
};

std::string_view to_string(ErrorCategory category) noexcept;

/// Base for every error raised by the library. The category drives the CLI
/// exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCategory::invalid_argument, what) {}
};

/// A weighted estimating equation with (numerically) zero slope.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorCategory::degenerate, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorCategory::convergence, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what)
      : Error(ErrorCategory::internal, what) {}
};

/// Raised by the harness when one replicate fails; wraps the original cause.
class ReplicateError : public Error {
 public:
  ReplicateError(std::size_t replicate, ErrorCategory cause, const std::string& what)
      : Error(cause, "replicate " + std::to_string(replicate) + ": " + what),
        replicate_(replicate) {}

  std::size_t replicate() const noexcept { return replicate_; }

 private:
  std::size_t replicate_;
};

}  // namespace orthoboot
