#pragma once

#include <stdexcept>
#include <string>

namespace skyshield {

enum class ErrorCode {
  MalformedHeader,
  MalformedRecord,
  OutOfBounds,
  NonMonotonicTime,
  TruncatedRecord,
  RejectedInvariant,
  InvalidWindow,
  DegenerateSpec,
  InvalidTau,
  InvalidConfig,
  ShapeMismatch,
  EmptyDataset,
  EmptyInput,
  DivergedLoss,
  MissingModel,
  IoFailure,
};

/// Library-wide exception carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace skyshield
