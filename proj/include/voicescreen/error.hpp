#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voicescreen {

enum class ErrorCode {
    // audio-io
    MalformedHeader,
    UnsupportedEncoding,
    EmptyAudio,
    AudioTooShort,
    // segmenter
    InsufficientAudio,
    InsufficientVoiced,
    // dsp-lld
    FrameTooShort,
    TooFewPeriods,
    NonPositiveAmplitude,
    UnvoicedFrame,
    SilentFrame,
    // featureset
    EmptyContour,
    BadMagic,
    DimMismatch,
    NonFiniteValue,
    // models
    TooFewRows,
    SingleClassData,
    DimensionMismatch,
    // eval
    TooFewParticipants,
    EmptyVote,
    EmptyCounts,
    FoldCollapse,
    LeakageDetected,
    // cohort-sim / io
    IoFailure,
    // cli
    SchemaViolation,
    DuplicateId,
    MissingFile,
    UnknownLabel,
    UnknownCommand,
    BadFlag,
    InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
        case ErrorCode::EmptyAudio: return "EmptyAudio";
        case ErrorCode::AudioTooShort: return "AudioTooShort";
        case ErrorCode::InsufficientAudio: return "InsufficientAudio";
        case ErrorCode::InsufficientVoiced: return "InsufficientVoiced";
        case ErrorCode::FrameTooShort: return "FrameTooShort";
        case ErrorCode::TooFewPeriods: return "TooFewPeriods";
        case ErrorCode::NonPositiveAmplitude: return "NonPositiveAmplitude";
        case ErrorCode::UnvoicedFrame: return "UnvoicedFrame";
        case ErrorCode::SilentFrame: return "SilentFrame";
        case ErrorCode::EmptyContour: return "EmptyContour";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::SingleClassData: return "SingleClassData";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TooFewParticipants: return "TooFewParticipants";
        case ErrorCode::EmptyVote: return "EmptyVote";
        case ErrorCode::EmptyCounts: return "EmptyCounts";
        case ErrorCode::FoldCollapse: return "FoldCollapse";
        case ErrorCode::LeakageDetected: return "LeakageDetected";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::UnknownCommand: return "UnknownCommand";
        case ErrorCode::BadFlag: return "BadFlag";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Input/configuration problems the user can fix; the CLI maps these to exit code 1.
constexpr bool is_validation_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SchemaViolation:
        case ErrorCode::DuplicateId:
        case ErrorCode::MissingFile:
        case ErrorCode::UnknownLabel:
        case ErrorCode::UnknownCommand:
        case ErrorCode::BadFlag:
        case ErrorCode::InvalidArgument:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace voicescreen
