#include "nnrw/error.hpp"

namespace nnrw {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::DuplicateTensorName: return "DuplicateTensorName";
    case ErrorCode::ManifestDangling: return "ManifestDangling";
    case ErrorCode::InvalidLayer: return "InvalidLayer";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBin: return "EmptyBin";
    case ErrorCode::ZeroOrNonFinite: return "ZeroOrNonFinite";
    case ErrorCode::PairOutOfRange: return "PairOutOfRange";
    case ErrorCode::NoUsableWeights: return "NoUsableWeights";
    case ErrorCode::BadPermutation: return "BadPermutation";
    case ErrorCode::NOutOfRange: return "NOutOfRange";
    case ErrorCode::NoValley: return "NoValley";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::CrcMismatch: return "CrcMismatch";
    case ErrorCode::MalformedPlan: return "MalformedPlan";
    case ErrorCode::PlanTooLarge: return "PlanTooLarge";
    case ErrorCode::CorruptCarrier: return "CorruptCarrier";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace nnrw
