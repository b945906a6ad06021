#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rd {

enum class ErrorCode {
  NonDivisibleGeometry,
  OutOfBounds,
  DegenerateWindow,
  DimensionMismatch,
  CommandOutOfRange,
  TooFewRows,
  SingularSystem,
  EmptyHoldout,
  PlacementFailure,
  InvalidArgument,
  NotACrash,
  ExpertCrashed,
  UnknownGroup,
  ConfigError,
  IoError,
  FormatError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI's --json mode) can react without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace rd
