#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fblab {

enum class ErrorCode {
  OutsideSupport,
  EmptySupport,
  DomainError,
  SingularDerivative,
  SupportHitBoundary,
  UnstableStep,
  NoConvergence,
  EmptyDomain,
  FrontCfl,
  PointOutsideDomain,
  PreconditionViolated,
  ParamsInconsistent,
  SearchFailed,
  ExtensionFailed,
  NotConcaveAtLo,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace fblab
