#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace brt {

enum class ErrorKind {
  MissingField,
  MalformedRecord,
  MalformedId,
  IoError,
  HttpError,
  UnsupportedTracker,
  RateLimited,
  EmptyTitle,
  InvalidExample,
  ProviderUnavailable,
  AuthMissing,
  BudgetExceeded,
  InsufficientRecordings,
  EmptyCompletion,
  NoTestMethodFound,
  UnbalancedBraces,
  NoTestSources,
  NoCandidateClasses,
  PatchConflict,
  RunnerError,
  NotSelected,
  ConfigError,
  MissingUpstreamStage,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class HttpError : public Error {
 public:
  HttpError(int status, const std::string& message)
      : Error(ErrorKind::HttpError, "status " + std::to_string(status) + " " + message),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class RateLimitedError : public Error {
 public:
  RateLimitedError(int retry_after_seconds, const std::string& message)
      : Error(ErrorKind::RateLimited, message), retry_after_(retry_after_seconds) {}

  /// Seconds suggested by the server, -1 when it did not say.
  int retry_after_seconds() const noexcept { return retry_after_; }

 private:
  int retry_after_;
};

}  // namespace brt
