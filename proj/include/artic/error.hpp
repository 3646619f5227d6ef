#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace artic {

enum class ErrorCode {
    SyntaxError,
    UnknownJoint,
    EmptySet,
    DegenerateInput,
    NoConsensus,
    KindMismatch,
    EmptyMask,
    DimensionMismatch,
    EmptyStore,
    UnknownPart,
    SchemaError,
    InvariantViolation,
    NoGraspSite,
    ZeroDelta,
    AlreadyHolding,
    NotHolding,
    NoStrategies,
    BackendFormatError,
    NoRuleMatched,
    BackendUnavailable,
    IoError,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries a stable code so that callers
// (the planner, the benchmark harness, the CLI) can record it without
// string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Located parse failure. Lines and columns are 1-based.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t line, std::size_t column, const std::string& message,
                ErrorCode code = ErrorCode::SyntaxError)
        : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                          message),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Schema failure pinned to a JSON path such as "$.parts[2].joint.limits".
class SchemaError : public Error {
public:
    SchemaError(std::string path, const std::string& message)
        : Error(ErrorCode::SchemaError, path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace artic
