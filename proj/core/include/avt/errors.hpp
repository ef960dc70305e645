#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace avt {

enum class ErrorCode {
  InvalidModel,
  InvalidArgument,
  Io,
  AllPathsImpossible,
  InstanceTooLarge,
  StateUnreachable,
  HypothesisLllFails,
  NoClusterFound,
  SeparationFailed,
  CycleTimeout,
  DegenerateSample,
  EmptyCell,
  QuadratureFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a model fails validation; carries one diagnostic per violated invariant.
class ModelError : public Error {
 public:
  explicit ModelError(std::vector<std::string> diagnostics);

  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

}  // namespace avt
