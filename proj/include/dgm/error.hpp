#pragma once

#include <stdexcept>
#include <string>

namespace dgm {

enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  Numeric = 3,
  InsufficientData = 4,
};

// Every failure raised by the core library. The C API maps `code()` onto
// dgm_status values one-to-one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace dgm
