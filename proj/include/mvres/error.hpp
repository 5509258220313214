#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvres {

/// Base class for every error the toolkit raises. `kind()` is a short
/// machine-readable tag used as the diagnostic prefix by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Malformed or inconsistent input data. `line()` is 1-based, 0 when the
/// error is not tied to a particular line.
class IngestError : public Error {
 public:
  IngestError(std::size_t line, const std::string& message)
      : Error("ingest", line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message) : Error("input", message) {}
};

/// Two inputs that should describe the same index space do not.
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& message) : Error("consistency", message) {}
};

}  // namespace mvres
