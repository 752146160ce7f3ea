#include "motionspace/error.hpp"

namespace motionspace {

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

ErrorClass Error::error_class() const noexcept
{
    switch (code_) {
    case ErrorCode::InvalidConfig:
        return ErrorClass::Usage;
    case ErrorCode::DegenerateInput:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::StaleTape:
        return ErrorClass::Numerical;
    default:
        return ErrorClass::Data;
    }
}

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyObservation: return "EmptyObservation";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StaleTape: return "StaleTape";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace motionspace
