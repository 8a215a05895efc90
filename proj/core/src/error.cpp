#include "viewforge/error.hpp"

namespace viewforge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::CorruptSample: return "CorruptSample";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::EmptyRelation: return "EmptyRelation";
    case ErrorCode::InsufficientBatch: return "InsufficientBatch";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::StaleTape: return "StaleTape";
    case ErrorCode::ViewCountMismatch: return "ViewCountMismatch";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NanLoss: return "NanLoss";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ExitEmpty: return "ExitEmpty";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace viewforge
