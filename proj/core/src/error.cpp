#include "fblab/error.hpp"

namespace fblab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::OutsideSupport: return "OutsideSupport";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::SingularDerivative: return "SingularDerivative";
    case ErrorCode::SupportHitBoundary: return "SupportHitBoundary";
    case ErrorCode::UnstableStep: return "UnstableStep";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::FrontCfl: return "FrontCfl";
    case ErrorCode::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ParamsInconsistent: return "ParamsInconsistent";
    case ErrorCode::SearchFailed: return "SearchFailed";
    case ErrorCode::ExtensionFailed: return "ExtensionFailed";
    case ErrorCode::NotConcaveAtLo: return "NotConcaveAtLo";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace fblab
