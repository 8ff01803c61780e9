#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mptrim {

/// Failure categories raised by the library.
enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotSymmetric,
  NotPositiveDefinite,
  InvalidProblem,
  NonPositiveScale,
  IterationLimit,
  DegenerateRow,
  NoValidTrials,
  NotInactive,
  LicqViolation,
  NotInPolyhedron,
  NoFeasibleSamples,
  UnboundedLift,
  Timeout,
  NoConvergence,
  EmptyConstraintSet,
  OriginNotInterior,
  DegenerateTrace,
  NotExponentiallyStable,
  TopologyMismatch,
  InfeasibleAtStep,
  NoTermination,
  Io,
};

inline std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::DegenerateRow: return "DegenerateRow";
    case ErrorCode::NoValidTrials: return "NoValidTrials";
    case ErrorCode::NotInactive: return "NotInactive";
    case ErrorCode::LicqViolation: return "LicqViolation";
    case ErrorCode::NotInPolyhedron: return "NotInPolyhedron";
    case ErrorCode::NoFeasibleSamples: return "NoFeasibleSamples";
    case ErrorCode::UnboundedLift: return "UnboundedLift";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyConstraintSet: return "EmptyConstraintSet";
    case ErrorCode::OriginNotInterior: return "OriginNotInterior";
    case ErrorCode::DegenerateTrace: return "DegenerateTrace";
    case ErrorCode::NotExponentiallyStable: return "NotExponentiallyStable";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::InfeasibleAtStep: return "InfeasibleAtStep";
    case ErrorCode::NoTermination: return "NoTermination";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying an ErrorCode.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace mptrim
