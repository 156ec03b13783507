#include "vsrnav/error.hpp"

namespace vsrnav {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::OffsetInfeasible: return "OffsetInfeasible";
    case ErrorKind::DisconnectedWorld: return "DisconnectedWorld";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyScene: return "EmptyScene";
    case ErrorKind::NoMatch: return "NoMatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::BadResponse: return "BadResponse";
    case ErrorKind::Unauthorized: return "Unauthorized";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::UnknownObject: return "UnknownObject";
    case ErrorKind::HandFull: return "HandFull";
    case ErrorKind::HandEmpty: return "HandEmpty";
    case ErrorKind::OutOfReach: return "OutOfReach";
    case ErrorKind::NotGraspable: return "NotGraspable";
    case ErrorKind::NoSurface: return "NoSurface";
    case ErrorKind::EmptyInstruction: return "EmptyInstruction";
    case ErrorKind::NoActionsFound: return "NoActionsFound";
    case ErrorKind::InvalidPlan: return "InvalidPlan";
    case ErrorKind::UnrecognizedInstruction: return "UnrecognizedInstruction";
    case ErrorKind::ClientError: return "ClientError";
    case ErrorKind::Busy: return "Busy";
  }
  return "Unknown";
}

}  // namespace vsrnav
