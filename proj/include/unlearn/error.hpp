#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace unlearn {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NotPositiveDefinite,
  SingularGram,
  IndefiniteObjective,
  Diverged,
  NotConverged,
  EmptyDataset,
  SubsampleTooLarge,
  ParseError,
  SchemaMismatch,
  IoError,
  DegenerateDirection,
  InsufficientData,
  NoFeasibleLambda,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// True for failures caused by malformed input (files, flags, shapes), as
/// opposed to numerical or method failures on well-formed input.
bool is_input_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace unlearn
