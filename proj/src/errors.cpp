#include "sapiens/errors.hpp"

namespace sapiens {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::CorruptChain: return "CorruptChain";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::RoleViolation: return "RoleViolation";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::AbandonedNode: return "AbandonedNode";
        case ErrorCode::InvalidProof: return "InvalidProof";
        case ErrorCode::InsufficientNodes: return "InsufficientNodes";
        case ErrorCode::InsufficientFunds: return "InsufficientFunds";
        case ErrorCode::IncompleteResults: return "IncompleteResults";
        case ErrorCode::NoPocsAvailable: return "NoPocsAvailable";
        case ErrorCode::IncompleteVerdicts: return "IncompleteVerdicts";
        case ErrorCode::MaxRoundsExceeded: return "MaxRoundsExceeded";
        case ErrorCode::UnknownUser: return "UnknownUser";
        case ErrorCode::UnassignedDetector: return "UnassignedDetector";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InternalInvariantViolation: return "InternalInvariantViolation";
    }
    return "UnknownError";
}

}  // namespace sapiens
