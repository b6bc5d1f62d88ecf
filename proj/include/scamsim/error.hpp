#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scamsim {

// Keep in sync with scamsim_status in scamsim.h (same numeric values).
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  ParseError = 2,
  IoError = 3,
  // session-core
  OutOfOrderEvent = 10,
  SessionNotActive = 11,
  DuplicateAdvice = 12,
  NonMonotoneTimestamp = 13,
  SessionIncomplete = 14,
  SessionNotFound = 15,
  // agent-orchestrator
  AdviceForNonTarget = 20,
  PhaseMismatch = 21,
  MissingSlotBinding = 22,
  UnknownSlot = 23,
  MissingTemplate = 24,
  ProviderError = 25,
  EmptyCompletion = 26,
  RefusalDetected = 27,
  UnparseableVerdict = 28,
  // quiz-engine
  NoItemForStep = 30,
  AlreadySolved = 31,
  IndexOutOfRange = 32,
  OptionAlreadyTried = 33,
  // assessment
  MissingItem = 40,
  OutOfScale = 41,
  // analysis
  RankDeficient = 50,
  TooFewRows = 51,
  DegenerateFactor = 52,
  LeverageOne = 53,
  OutOfRangeP = 54,
  NoOverlap = 55,
  ZeroMargin = 56,
  EmptySample = 57,
  NoConvergence = 58,
  // service-api
  DuplicateParticipant = 60,
  PackInvalid = 61,
  GateClosed = 62,
  TextEmpty = 63,
  TextTooLong = 64,
  Unauthorized = 65,
  VersionConflict = 66,
  DwellNotMet = 67,
  InvalidInvite = 68,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace scamsim
