#pragma once

#include <stdexcept>
#include <string>

namespace vkplate {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or non-conforming mesh input, or a refinement that failed to close.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Bad arguments (unsupported quadrature degree, mismatched dof map, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A linear or nonlinear solve failed. Carries the method name and mesh level.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::string method, int level)
      : Error(what + " [method=" + method + ", level=" + std::to_string(level) + "]"),
        method_(std::move(method)),
        level_(level) {}

  const std::string& method() const { return method_; }
  int level() const { return level_; }

 private:
  std::string method_;
  int level_;
};

}  // namespace vkplate
