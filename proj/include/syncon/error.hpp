#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace syncon {

enum class ErrorCode {
  InvalidArgument,
  NonFinite,
  RankDeficient,
  InfeasibleInput,
  DimensionMismatch,
  InvalidScenario,
  MissingCovariates,
  OuterSearchFailed,
  AllReplicationsFailed,
  MissingReferenceCell,
  ParseError,
  MissingTreatedColumn,
  NonMonotoneTime,
  NonFiniteCell,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so
/// callers (the Monte Carlo engine, the CLI) can classify it without parsing
/// the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace syncon
