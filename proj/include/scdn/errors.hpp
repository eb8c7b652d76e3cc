#pragma once

#include <stdexcept>
#include <string>

namespace scdn {

enum class ErrorCode {
  ZeroDistance,
  DomainError,
  ShapeMismatch,
  MissingEmbedding,
  InactiveDevice,
  UnknownDevice,
  DuplicateDevice,
  NonPositiveDenominator,
  NonPositivePoint,
  MaxIterations,
  NumericalBreakdown,
  InfeasibleAnchor,
  NoFeasibleActivation,
  ConfigError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scdn
