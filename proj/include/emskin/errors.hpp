#pragma once

#include <stdexcept>
#include <string>

namespace emskin {

/// Bad input: malformed files, out-of-range parameters, schema violations.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical or internal failure at run time. The CLI maps this to exit code 1.
class ComputeError : public std::runtime_error {
 public:
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace emskin
