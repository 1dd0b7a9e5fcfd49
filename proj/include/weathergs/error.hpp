#pragma once

#include <stdexcept>
#include <string>

namespace wgs {

enum class ErrorCode {
    // Validation-class failures (CLI exit code 2).
    Validation,
    MalformedHeader,
    SchemaError,
    DanglingPath,
    DimensionMismatch,
    UnknownInstruction,
    VersionMismatch,
    // Runtime-class failures (CLI exit code 1).
    IoFailure,
    CheckpointCorrupt,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ErrorCode code() const { return code_; }

    /// True for errors a user can fix by changing inputs/config.
    bool is_validation() const {
        switch (code_) {
            case ErrorCode::Validation:
            case ErrorCode::MalformedHeader:
            case ErrorCode::SchemaError:
            case ErrorCode::DanglingPath:
            case ErrorCode::DimensionMismatch:
            case ErrorCode::UnknownInstruction:
            case ErrorCode::VersionMismatch:
                return true;
            default:
                return false;
        }
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

}  // namespace wgs
