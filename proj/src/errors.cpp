#include "scdn/errors.hpp"

namespace scdn {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::InactiveDevice: return "InactiveDevice";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::DuplicateDevice: return "DuplicateDevice";
    case ErrorCode::NonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorCode::NonPositivePoint: return "NonPositivePoint";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::InfeasibleAnchor: return "InfeasibleAnchor";
    case ErrorCode::NoFeasibleActivation: return "NoFeasibleActivation";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace scdn
