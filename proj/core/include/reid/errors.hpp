#pragma once

#include <stdexcept>
#include <string>

namespace reid {

/// Input violates an operation's precondition (shape mismatch, wrong size, out-of-range label).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed file content. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid or inconsistent configuration value; names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& why)
      : std::invalid_argument(field + ": " + why), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A loss term or activation became NaN/Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reid
