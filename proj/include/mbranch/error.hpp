#pragma once

#include <stdexcept>
#include <string>

namespace mbranch {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Validation,
  NonConvergence,
  Truncation,
  Integrator,
  Domain,
  Io,
};

/// Base exception for every failure raised by the library. The code is what
/// the C API and the CLI translate into status values and exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace mbranch
