#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gqe {

enum class ErrorCode {
  MalformedHeader,
  UnsupportedFormat,
  MissingProperty,
  TruncatedBody,
  IoFailure,
  WrongColorSpace,
  InvalidArgument,
  ShapeMismatch,
  IndexOutOfRange,
  NotScalarLoss,
  ConfigError,
  GeometryMismatch,
  InsufficientPoints,
  NoOverlap,
  EmptyDataset,
  ShapeAudit,
  MissingCheckpoint,
  ConfigMismatch,
  BadMagic,
  VersionUnsupported,
  CorruptTensor,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; `code()` is stable and
// machine-readable, `what()` carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace gqe
