#pragma once

#include <stdexcept>
#include <string>

namespace elcap {

/// Invalid configuration or argument values. Mapped to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Minimization could not make progress. Mapped to CLI exit code 2.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Traction load fails the compatibility scan. Mapped to CLI exit code 3.
class IncompatibleLoadError : public std::runtime_error {
 public:
  explicit IncompatibleLoadError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace elcap
