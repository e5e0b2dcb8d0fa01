#pragma once

#include <stdexcept>
#include <string>

namespace mfgmix {

// Values are part of the C ABI (see mfgmix.h); append only.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  NegativeEntry = 2,
  MassMismatch = 3,
  FormatVersionMismatch = 4,
  DimensionMismatch = 5,
  CorruptFile = 6,
  ZeroProbabilityWithEntropy = 7,
  NonconvergentRootFind = 8,
  UnsupportedCost = 9,
  SingularSystem = 10,
  MaxIterationsExceeded = 11,
  NonUniqueStationary = 12,
  PositivityViolation = 13,
  AllComponentsVanish = 14,
  EmptyCluster = 15,
  OutOfDomain = 16,
  BadMagic = 17,
  TruncatedFile = 18,
  DimensionOverflow = 19,
  UnknownLabel = 20,
  EmptyClass = 21,
  NotSquare = 22,
  IoFailure = 23,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mfgmix
