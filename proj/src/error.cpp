#include "posemo/error.hpp"

namespace posemo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::NoPerson: return "NoPerson";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::MixedSchema: return "MixedSchema";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateClipId: return "DuplicateClipId";
    case ErrorCode::Unrepairable: return "Unrepairable";
    case ErrorCode::DegenerateTorso: return "DegenerateTorso";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingCodebook: return "MissingCodebook";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::DivergedLoss:
    case ErrorCode::NonFiniteActivation:
      return 4;
    default:
      return 3;
  }
}

}  // namespace posemo
