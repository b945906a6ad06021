#include "rd/error.hpp"

namespace rd {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonDivisibleGeometry: return "NonDivisibleGeometry";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CommandOutOfRange: return "CommandOutOfRange";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyHoldout: return "EmptyHoldout";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotACrash: return "NotACrash";
    case ErrorCode::ExpertCrashed: return "ExpertCrashed";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace rd
