#include "avt/errors.hpp"

namespace avt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::AllPathsImpossible: return "AllPathsImpossible";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::StateUnreachable: return "StateUnreachable";
    case ErrorCode::HypothesisLllFails: return "HypothesisLllFails";
    case ErrorCode::NoClusterFound: return "NoClusterFound";
    case ErrorCode::SeparationFailed: return "SeparationFailed";
    case ErrorCode::CycleTimeout: return "CycleTimeout";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {
std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& line : lines) {
    if (!out.empty()) out += "; ";
    out += line;
  }
  return out;
}
}  // namespace

ModelError::ModelError(std::vector<std::string> diagnostics)
    : Error(ErrorCode::InvalidModel, join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

}  // namespace avt
