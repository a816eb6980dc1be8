#include "ocitune/error.hpp"

namespace ocitune {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroPolynomial: return "ZeroPolynomial";
    case ErrorCode::RootOnUnitCircle: return "RootOnUnitCircle";
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::SingularTransferMatrix: return "SingularTransferMatrix";
    case ErrorCode::ImproperEntry: return "ImproperEntry";
    case ErrorCode::AlgebraicLoop: return "AlgebraicLoop";
    case ErrorCode::SingularController: return "SingularController";
    case ErrorCode::SingularIminusTd: return "SingularIminusTd";
    case ErrorCode::UnstableReferenceFilter: return "UnstableReferenceFilter";
    case ErrorCode::ImproperPredictor: return "ImproperPredictor";
    case ErrorCode::SylvesterSingular: return "SylvesterSingular";
    case ErrorCode::ZeroOutputComponent: return "ZeroOutputComponent";
    case ErrorCode::NonPSD: return "NonPSD";
    case ErrorCode::ZeroNoiseVariance: return "ZeroNoiseVariance";
    case ErrorCode::UnstableInitialLoop: return "UnstableInitialLoop";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ocitune
