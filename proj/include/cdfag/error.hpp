#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdfag {

enum class ErrorCode {
  InsufficientData,
  NonFiniteInput,
  BadConfig,
  EmptyInput,
  DegenerateData,
  DimensionMismatch,
  AsymmetricInput,
  SingularPencil,
  NonConvergence,
  InsufficientLabels,
  UnknownDomain,
  MissingClass,
  NonFiniteLoss,
  SingleClass,
  TooFewSamples,
  BadSpec,
  SplitTooLarge,
  LengthMismatch,
  ClassSetMismatch,
  CorruptModel,
  VersionMismatch,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every stage of the library. `stage()` is empty until an
/// orchestrating caller tags it (see with_stage).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

/// CLI exit status: 2 config error, 3 data error, 4 numerical failure.
int exit_code_for(ErrorCode code);

/// Runs `fn`, re-throwing any untagged Error with `stage` attached.
template <typename Fn>
decltype(auto) with_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.code(), e.detail(), stage);
  }
}

}  // namespace cdfag
