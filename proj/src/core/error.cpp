#include "scamsim/error.hpp"

namespace scamsim {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::OutOfOrderEvent: return "OutOfOrderEvent";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::DuplicateAdvice: return "DuplicateAdvice";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::SessionIncomplete: return "SessionIncomplete";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::AdviceForNonTarget: return "AdviceForNonTarget";
    case ErrorCode::PhaseMismatch: return "PhaseMismatch";
    case ErrorCode::MissingSlotBinding: return "MissingSlotBinding";
    case ErrorCode::UnknownSlot: return "UnknownSlot";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::RefusalDetected: return "RefusalDetected";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::NoItemForStep: return "NoItemForStep";
    case ErrorCode::AlreadySolved: return "AlreadySolved";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::OptionAlreadyTried: return "OptionAlreadyTried";
    case ErrorCode::MissingItem: return "MissingItem";
    case ErrorCode::OutOfScale: return "OutOfScale";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::DegenerateFactor: return "DegenerateFactor";
    case ErrorCode::LeverageOne: return "LeverageOne";
    case ErrorCode::OutOfRangeP: return "OutOfRangeP";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::ZeroMargin: return "ZeroMargin";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DuplicateParticipant: return "DuplicateParticipant";
    case ErrorCode::PackInvalid: return "PackInvalid";
    case ErrorCode::GateClosed: return "GateClosed";
    case ErrorCode::TextEmpty: return "TextEmpty";
    case ErrorCode::TextTooLong: return "TextTooLong";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::VersionConflict: return "VersionConflict";
    case ErrorCode::DwellNotMet: return "DwellNotMet";
    case ErrorCode::InvalidInvite: return "InvalidInvite";
  }
  return "Unknown";
}

}  // namespace scamsim
