#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace viewforge {

enum class ErrorCode {
  EmptyDataset,
  ShapeMismatch,
  IoError,
  FormatError,
  CorruptFile,
  IndexError,
  CorruptSample,
  InvalidParam,
  EmptyRelation,
  InsufficientBatch,
  DegenerateEmbedding,
  StaleTape,
  ViewCountMismatch,
  InvalidLabel,
  EmptyInput,
  NanLoss,
  ConfigError,
  ExitEmpty,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; code() names the failure
// class so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace viewforge
