#include "rwcp/error.hpp"

namespace rwcp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TargetInfeasible: return "TargetInfeasible";
    case ErrorKind::Unsatisfiable: return "Unsatisfiable";
    case ErrorKind::EmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorKind::EmptyBasePrediction: return "EmptyBasePrediction";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace rwcp
