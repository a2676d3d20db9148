#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nnrw {

enum class ErrorCode {
  // container
  BadMagic,
  TruncatedFile,
  TrailingData,
  VersionUnsupported,
  UnsupportedDtype,
  DuplicateTensorName,
  ManifestDangling,
  InvalidLayer,
  InvalidShape,
  // channel scorer
  ShapeMismatch,
  EmptyBin,
  // host codec
  ZeroOrNonFinite,
  PairOutOfRange,
  NoUsableWeights,
  BadPermutation,
  NOutOfRange,
  // hs coder / sidecar / protocol
  NoValley,
  CapacityExceeded,
  CrcMismatch,
  MalformedPlan,
  PlanTooLarge,
  CorruptCarrier,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nnrw
