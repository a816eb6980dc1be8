#pragma once

#include <stdexcept>
#include <string>

namespace ocitune {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  ZeroPolynomial,
  RootOnUnitCircle,
  PoleHit,
  SingularTransferMatrix,
  ImproperEntry,
  AlgebraicLoop,
  SingularController,
  SingularIminusTd,
  UnstableReferenceFilter,
  ImproperPredictor,
  SylvesterSingular,
  ZeroOutputComponent,
  NonPSD,
  ZeroNoiseVariance,
  UnstableInitialLoop,
  NonFiniteCost,
  AllStartsFailed,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ocitune
