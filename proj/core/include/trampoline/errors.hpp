#pragma once

#include <stdexcept>
#include <string>

namespace trampoline {

// Invalid configuration or parameter file contents.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable/unwritable files and malformed record formats.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Data that cannot be fitted at all (no peak, rising trend, ...).
// Non-convergence is not an error; it is reported on the FitResult.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace trampoline
