#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace posemo {

enum class ErrorCode {
  InvalidArgument,
  MalformedFile,
  NoPerson,
  EmptySequence,
  MixedSchema,
  EmptyManifest,
  UnknownLabel,
  DuplicateClipId,
  Unrepairable,
  DegenerateTorso,
  SequenceTooShort,
  TooFewPoints,
  DimensionMismatch,
  MissingCodebook,
  EmptyWindow,
  ShapeMismatch,
  NonFiniteActivation,
  DivergedLoss,
  KindMismatch,
  EmptyStore,
  LengthMismatch,
  ConfigMismatch,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Process exit status for an error: 4 for numeric divergence, 3 for any other
// data error. Usage errors (2) are raised by the CLI parser itself.
int exit_status(ErrorCode code);

}  // namespace posemo
