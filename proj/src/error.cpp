#include "unlearn/error.hpp"

namespace unlearn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::IndefiniteObjective: return "IndefiniteObjective";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::SubsampleTooLarge: return "SubsampleTooLarge";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NoFeasibleLambda: return "NoFeasibleLambda";
  }
  return "Unknown";
}

bool is_input_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::ParseError:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::IoError:
    case ErrorKind::EmptyDataset:
    case ErrorKind::SubsampleTooLarge:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace unlearn
