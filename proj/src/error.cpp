#include "cdfag/error.hpp"

namespace cdfag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::SingularPencil: return "SingularPencil";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InsufficientLabels: return "InsufficientLabels";
    case ErrorCode::UnknownDomain: return "UnknownDomain";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::SplitTooLarge: return "SplitTooLarge";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ClassSetMismatch: return "ClassSetMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message,
                    const std::string& stage) {
  std::string out;
  if (!stage.empty()) out += "[" + stage + "] ";
  out += std::string(to_string(code));
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(message) {}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::ParseError:
    case ErrorCode::BadSpec:
      return 2;
    case ErrorCode::SingularPencil:
    case ErrorCode::NonConvergence:
    case ErrorCode::NonFiniteLoss:
      return 4;
    default:
      return 3;
  }
}

}  // namespace cdfag
