#pragma once

#include <stdexcept>
#include <string>

namespace lggm {

/// Bad inputs: dimension mismatches, invalid settings, malformed files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: solver breakdown, non-PD factorization where PD is required.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem / serialization failure.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lggm
