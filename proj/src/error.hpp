#pragma once

#include <stdexcept>
#include <string>

namespace homlab {

// Failure taxonomy. The category drives both the CLI exit code and the
// C API status value: config = 2, data = 3, numeric = 4.
enum class ErrorKind {
  kConfigParse,
  kUnknownKey,
  kInvalidValue,
  kIo,
  kUnsupportedFormat,
  kCorruptFile,
  kFormatVersionMismatch,
  kChecksumMismatch,
  kOutOfBounds,
  kImageTooSmall,
  kEmptyCorpus,
  kShapeMismatch,
  kDegenerateProjection,
  kSingularMatrix,
  kSingularSystem,
  kNonFiniteLoss,
  kTooCloseToBorder,
  kInsufficientMatches,
  kNoConsensus,
};

enum class ErrorCategory { kConfig = 2, kData = 3, kNumeric = 4 };

constexpr ErrorCategory CategoryOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigParse:
    case ErrorKind::kUnknownKey:
    case ErrorKind::kInvalidValue:
      return ErrorCategory::kConfig;
    case ErrorKind::kIo:
    case ErrorKind::kUnsupportedFormat:
    case ErrorKind::kCorruptFile:
    case ErrorKind::kFormatVersionMismatch:
    case ErrorKind::kChecksumMismatch:
    case ErrorKind::kOutOfBounds:
    case ErrorKind::kImageTooSmall:
    case ErrorKind::kEmptyCorpus:
    case ErrorKind::kShapeMismatch:
      return ErrorCategory::kData;
    case ErrorKind::kDegenerateProjection:
    case ErrorKind::kSingularMatrix:
    case ErrorKind::kSingularSystem:
    case ErrorKind::kNonFiniteLoss:
    case ErrorKind::kTooCloseToBorder:
    case ErrorKind::kInsufficientMatches:
    case ErrorKind::kNoConsensus:
      return ErrorCategory::kNumeric;
  }
  return ErrorCategory::kNumeric;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  ErrorCategory category() const { return CategoryOf(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace homlab
