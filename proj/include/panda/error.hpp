#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace panda {

enum class ErrorCode {
  kPrecondition,
  kDegenerateObjective,
  kInnerSolverDivergence,
  kGenerationFailure,
  kDegenerateInstance,
  kInconsistentOptimum,
  kDomain,
  kOutOfRange,
  kInfeasible,
  kInsufficientData,
  kInsufficientSnapshots,
  kDivergence,
  kConfig,
  kParse,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code().
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

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::kPrecondition, what);
}

}  // namespace panda
