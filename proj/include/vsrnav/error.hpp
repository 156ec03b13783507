#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsrnav {

enum class ErrorKind {
  InvalidArgument,
  IoError,
  // gridmap / coverage
  OffsetInfeasible,
  DisconnectedWorld,
  TooLarge,
  Infeasible,
  // vsr
  InvalidDepth,
  DimensionMismatch,
  EmptyScene,
  NoMatch,
  CorruptFile,
  // embed
  EmptyText,
  UnknownLabel,
  Timeout,
  BadResponse,
  Unauthorized,
  // simworld
  Unreachable,
  UnknownObject,
  HandFull,
  HandEmpty,
  OutOfReach,
  NotGraspable,
  NoSurface,
  // instruct
  EmptyInstruction,
  NoActionsFound,
  InvalidPlan,
  UnrecognizedInstruction,
  ClientError,
  // service
  Busy,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Domain error carrying a machine-readable kind. The kind name is what the
/// CLI prints and what the HTTP API reports in its "error" field.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vsrnav
