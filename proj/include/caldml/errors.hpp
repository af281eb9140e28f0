#pragma once

#include <stdexcept>
#include <string>

namespace caldml {

/// Invalid configuration, flags, or input data (maps to CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure during estimation (maps to CLI exit code 1).
class ComputeError : public std::runtime_error {
public:
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace caldml
