#pragma once

#include <stdexcept>
#include <string>

namespace motionspace {

enum class ErrorCode {
    InvalidInput,
    InvalidConfig,
    DegenerateInput,
    OutOfBounds,
    TooShort,
    EmptyInput,
    EmptyObservation,
    ShapeMismatch,
    StaleTape,
    NonFiniteGradient,
    ParseError,
    IoError,
};

// Coarse classification used for process exit codes.
enum class ErrorClass { Usage, Data, Numerical };

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    ErrorClass error_class() const noexcept;

private:
    ErrorCode code_;
};

const char* to_string(ErrorCode code) noexcept;

} // namespace motionspace
