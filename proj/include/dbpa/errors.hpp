#pragma once

#include <stdexcept>
#include <string>

namespace dbpa {

enum class ErrorCode {
    InvalidConfig,
    InvalidScenario,
    InvalidSampleSize,
    MissingPlaceholder,
    UnknownModel,
    ProviderUnavailable,
    ProtocolViolation,
    ZeroVector,
    EmptyText,
    EmptyDistribution,
    EmbeddingsRequired,
    SizeMismatch,
    IoError,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:       return "InvalidConfig";
        case ErrorCode::InvalidScenario:     return "InvalidScenario";
        case ErrorCode::InvalidSampleSize:   return "InvalidSampleSize";
        case ErrorCode::MissingPlaceholder:  return "MissingPlaceholder";
        case ErrorCode::UnknownModel:        return "UnknownModel";
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::ProtocolViolation:   return "ProtocolViolation";
        case ErrorCode::ZeroVector:          return "ZeroVector";
        case ErrorCode::EmptyText:           return "EmptyText";
        case ErrorCode::EmptyDistribution:   return "EmptyDistribution";
        case ErrorCode::EmbeddingsRequired:  return "EmbeddingsRequired";
        case ErrorCode::SizeMismatch:        return "SizeMismatch";
        case ErrorCode::IoError:             return "IoError";
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

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

} // namespace dbpa
