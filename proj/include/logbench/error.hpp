#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace logbench {

enum class ErrorKind {
  MissingColumn,
  EmptyDataset,
  MalformedRow,
  ArityMismatch,
  EmptyLog,
  InsufficientTemplates,
  AuthError,
  RateLimitExhausted,
  TransportError,
  FixtureMiss,
  CacheIoError,
  EmptyTemplate,
  CoverageMismatch,
  EmptyInput,
  InvalidConfig,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::InsufficientTemplates: return "InsufficientTemplates";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::RateLimitExhausted: return "RateLimitExhausted";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::FixtureMiss: return "FixtureMiss";
    case ErrorKind::CacheIoError: return "CacheIoError";
    case ErrorKind::EmptyTemplate: return "EmptyTemplate";
    case ErrorKind::CoverageMismatch: return "CoverageMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace logbench
