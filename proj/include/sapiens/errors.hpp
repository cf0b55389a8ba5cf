#pragma once

#include <stdexcept>
#include <string>

namespace sapiens {

enum class ErrorCode {
    EmptyBatch,
    CorruptChain,
    DuplicateId,
    RoleViolation,
    UnknownNode,
    AbandonedNode,
    InvalidProof,
    InsufficientNodes,
    InsufficientFunds,
    IncompleteResults,
    NoPocsAvailable,
    IncompleteVerdicts,
    MaxRoundsExceeded,
    UnknownUser,
    UnassignedDetector,
    ParseError,
    ValidationError,
    IoError,
    InternalInvariantViolation,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace sapiens
