#pragma once

#include <stdexcept>
#include <string>

namespace aiq {

enum class ErrorCode {
    MalformedManifest,
    MissingTensor,
    ShapeMismatch,
    NonFiniteWeight,
    ShapeMissing,
    LengthMismatch,
    EmptyModel,
    MalformedFile,
    LabelOutOfRange,
    EmptySubset,
    SpaceTooLarge,
    ConfigInvalid,
    KTooLarge,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedManifest: return "MalformedManifest";
        case ErrorCode::MissingTensor: return "MissingTensor";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
        case ErrorCode::ShapeMissing: return "ShapeMissing";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyModel: return "EmptyModel";
        case ErrorCode::MalformedFile: return "MalformedFile";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::EmptySubset: return "EmptySubset";
        case ErrorCode::SpaceTooLarge: return "SpaceTooLarge";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace aiq
