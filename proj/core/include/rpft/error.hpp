#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rpft {

enum class ErrorCode {
  // core types
  InvalidArgument,
  InvalidBundle,
  ZeroNormRow,
  LabelOutOfRange,
  InsufficientShots,
  // kernels
  DimensionMismatch,
  BlockCountMismatch,
  MissingTextAnchors,
  EmptyComposite,
  UnsupportedKernel,
  // krr
  NotPositiveDefinite,
  // anchors
  WrongKind,
  CountMismatch,
  MissingLabels,
  UnbalancedSupport,
  EmptyClass,
  // logits
  MissingAnchors,
  DegenerateSoftmax,
  ConfigAnchorMismatch,
  // trainer
  KernelMismatch,
  DivergedLoss,
  // harness io
  BadMagic,
  BadVersion,
  ShapeMismatch,
  CorruptLabels,
  IoFailure,
  EmptyBundle,
  AlreadyExists,
};

/// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { Usage, Data, Numerical };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return rpft::category(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& detail);

}  // namespace rpft
