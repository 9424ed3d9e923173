#pragma once

#include <stdexcept>
#include <string>

namespace ordino {

enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kShapeMismatch = 2,
  kOutOfRange = 3,
  kNonFinite = 4,
  kZeroFeature = 5,
  kIo = 6,
  kParse = 7,
  kConfig = 8,
  kDivergence = 9,
  kInternal = 10,
};

// All library failures are reported as ordino::Error; the C API maps the
// code onto its integer status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace ordino
