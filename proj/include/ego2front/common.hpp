#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ego2front {

// Error taxonomy. The CLI maps categories to exit codes (usage=2, data=3, runtime=4).
enum class ErrorCode {
    UsageError,
    PointOutsideFov,
    LengthTooShort,
    NoTransientFound,
    MaskMissing,
    SplitTooShort,
    CropOutOfBounds,
    IndexOutOfRange,
    EmptyPoseSet,
    ShapeMismatch,
    NonFiniteInput,
    DatasetTooSmall,
    NonFiniteLoss,
    UnknownMode,
    SequenceTooShort,
    ConfigMismatch,
    LengthMismatch,
    IoError,
};

enum class ErrorCategory { usage = 2, data = 3, runtime = 4 };

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ErrorCode code() const { return code_; }

    ErrorCategory category() const {
        switch (code_) {
            case ErrorCode::UsageError:
            case ErrorCode::UnknownMode:
                return ErrorCategory::usage;
            case ErrorCode::PointOutsideFov:
            case ErrorCode::LengthTooShort:
            case ErrorCode::NoTransientFound:
            case ErrorCode::MaskMissing:
            case ErrorCode::SplitTooShort:
            case ErrorCode::CropOutOfBounds:
            case ErrorCode::IndexOutOfRange:
            case ErrorCode::EmptyPoseSet:
            case ErrorCode::DatasetTooSmall:
            case ErrorCode::SequenceTooShort:
            case ErrorCode::ConfigMismatch:
            case ErrorCode::LengthMismatch:
            case ErrorCode::IoError:
                return ErrorCategory::data;
            default:
                return ErrorCategory::runtime;
        }
    }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) raise(code, msg);
}

}  // namespace ego2front
