#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsalsa {

enum class ErrorCode {
  InvalidArgument,
  ZeroColumn,
  FactorizationFailure,
  PartitionMismatch,
  DimensionMismatch,
  ShapeMismatch,
  NonFiniteIterate,
  NonFiniteActivation,
  FormatError,
  IoError,
  MissingTape,
  DivergedLoss,
  UnknownMethod,
  MissingParameter,
  MissingModel,
  PatchTooLarge,
  EmptySource,
  SingularS,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the toolkit; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the error-code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace lsalsa
