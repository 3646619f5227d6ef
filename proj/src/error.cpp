#include "artic/error.hpp"

namespace artic {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownJoint: return "UnknownJoint";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::UnknownPart: return "UnknownPart";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::NoGraspSite: return "NoGraspSite";
    case ErrorCode::ZeroDelta: return "ZeroDelta";
    case ErrorCode::AlreadyHolding: return "AlreadyHolding";
    case ErrorCode::NotHolding: return "NotHolding";
    case ErrorCode::NoStrategies: return "NoStrategies";
    case ErrorCode::BackendFormatError: return "BackendFormatError";
    case ErrorCode::NoRuleMatched: return "NoRuleMatched";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::IoError: return "IoError";
    }
    return "Error";
}

}  // namespace artic
