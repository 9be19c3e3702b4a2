#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace carkov {

enum class ErrorCode {
  NonPositiveImaginaryPart,
  UnpairedRoot,
  NonPositiveScale,
  NearDegenerateRoots,
  OrderTooHigh,
  NotConverged,
  SingularGram,
  NonPositiveDiffusion,
  NotPositiveDefinite,
  FactorizationFailure,
  UnstableStep,
  TailTooHeavy,
  EqualRates,
  PathTooShort,
  DegenerateConditioning,
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for every library failure; the code is what callers
// (and the CLI's error JSON) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace carkov
