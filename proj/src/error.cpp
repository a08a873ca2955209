#include "gqe/error.hpp"

namespace gqe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MissingProperty: return "MissingProperty";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::WrongColorSpace: return "WrongColorSpace";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotScalarLoss: return "NotScalarLoss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ShapeAudit: return "ShapeAudit";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::CorruptTensor: return "CorruptTensor";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

}  // namespace gqe
