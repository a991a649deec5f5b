#include "rpft/error.hpp"

namespace rpft {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidBundle: return "InvalidBundle";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InsufficientShots: return "InsufficientShots";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BlockCountMismatch: return "BlockCountMismatch";
    case ErrorCode::MissingTextAnchors: return "MissingTextAnchors";
    case ErrorCode::EmptyComposite: return "EmptyComposite";
    case ErrorCode::UnsupportedKernel: return "UnsupportedKernel";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::UnbalancedSupport: return "UnbalancedSupport";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::MissingAnchors: return "MissingAnchors";
    case ErrorCode::DegenerateSoftmax: return "DegenerateSoftmax";
    case ErrorCode::ConfigAnchorMismatch: return "ConfigAnchorMismatch";
    case ErrorCode::KernelMismatch: return "KernelMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::CorruptLabels: return "CorruptLabels";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigAnchorMismatch:
    case ErrorCode::KernelMismatch:
    case ErrorCode::UnsupportedKernel:
    case ErrorCode::EmptyComposite:
    case ErrorCode::AlreadyExists:
      return ErrorCategory::Usage;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::DegenerateSoftmax:
    case ErrorCode::DivergedLoss:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void raise(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace rpft
