#include "panda/error.hpp"

namespace panda {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDegenerateObjective: return "degenerate-objective";
    case ErrorCode::kInnerSolverDivergence: return "inner-solver-divergence";
    case ErrorCode::kGenerationFailure: return "generation-failure";
    case ErrorCode::kDegenerateInstance: return "degenerate-instance";
    case ErrorCode::kInconsistentOptimum: return "inconsistent-optimum";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kInsufficientSnapshots: return "insufficient-snapshots";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace panda
