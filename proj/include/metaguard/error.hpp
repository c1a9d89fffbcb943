// error.hpp: error taxonomy shared by every pipeline stage.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mg {

enum class ErrorCode {
    MalformedRecord,
    UnknownChannel,
    NonMonotoneTimestamp,
    OutOfRangeWeight,
    InvalidProfile,
    InfeasibleSpec,
    SessionTooShort,
    WindowOutOfRange,
    EmptyTrainingSet,
    ShapeMismatch,
    DegenerateCorpus,
    NonFiniteLoss,
    UnsupportedVersion,
    CorruptWeights,
    PolicyModelMismatch,
    PromptUnavailable,
    DestinationUnavailable,
    InsufficientData,
    IncomparableReports,
    IoFailure,
};

constexpr std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::OutOfRangeWeight: return "OutOfRangeWeight";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::SessionTooShort: return "SessionTooShort";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateCorpus: return "DegenerateCorpus";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptWeights: return "CorruptWeights";
    case ErrorCode::PolicyModelMismatch: return "PolicyModelMismatch";
    case ErrorCode::PromptUnavailable: return "PromptUnavailable";
    case ErrorCode::DestinationUnavailable: return "DestinationUnavailable";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::IncomparableReports: return "IncomparableReports";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace mg
