#include "brt/error.hpp"

namespace brt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::MalformedId: return "MalformedId";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::HttpError: return "HttpError";
    case ErrorKind::UnsupportedTracker: return "UnsupportedTracker";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::EmptyTitle: return "EmptyTitle";
    case ErrorKind::InvalidExample: return "InvalidExample";
    case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorKind::AuthMissing: return "AuthMissing";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::InsufficientRecordings: return "InsufficientRecordings";
    case ErrorKind::EmptyCompletion: return "EmptyCompletion";
    case ErrorKind::NoTestMethodFound: return "NoTestMethodFound";
    case ErrorKind::UnbalancedBraces: return "UnbalancedBraces";
    case ErrorKind::NoTestSources: return "NoTestSources";
    case ErrorKind::NoCandidateClasses: return "NoCandidateClasses";
    case ErrorKind::PatchConflict: return "PatchConflict";
    case ErrorKind::RunnerError: return "RunnerError";
    case ErrorKind::NotSelected: return "NotSelected";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingUpstreamStage: return "MissingUpstreamStage";
  }
  return "Unknown";
}

}  // namespace brt
