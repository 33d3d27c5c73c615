#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoparc {

enum class ErrorCode {
  NonProbability,
  TrivialLaw,
  BadParam,
  BeyondRadius,
  DivergentAtRadius,
  Overflow,
  BadTruncation,
  NearRadius,
  NotSubcritical,
  BeyondThreshold,
  NegativeRadicand,
  CutoffTooSmall,
  Infeasible,
  InsufficientRange,
  TooLarge,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// that callers (the CLI in particular) can map it to a stable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace geoparc
