#pragma once

#include <stdexcept>
#include <string>

namespace updrop {

// A caller violated a documented precondition (bad argument, invalid config).
struct UsageError : std::invalid_argument {
  explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Data that should be internally consistent is not (shape or index mismatch).
struct StructureError : std::invalid_argument {
  explicit StructureError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A computation produced a non-finite or otherwise unusable value.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Reading or writing a file failed.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input text (CSV, JSON) could not be interpreted; message carries the location.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A statistical test was requested on inputs where it is undefined.
struct UndefinedTestError : UsageError {
  explicit UndefinedTestError(const std::string& msg) : UsageError(msg) {}
};

}  // namespace updrop
