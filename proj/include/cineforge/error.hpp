// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cineforge {

enum class ErrorCode {
    BehindCamera,
    NonPositiveDepth,
    DegenerateInput,
    FrameOutOfRange,
    LastKeyframeRemoval,
    UnknownEntity,
    EntityNeverVisible,
    EmptyCloud,
    ShapeMismatch,
    TOutOfRange,
    NoValidPairs,
    EmptyRegion,
    SchemaVersionUnsupported,
    ParseError,
    DepthOverflow,
    FieldCountError,
    NonFiniteValue,
    ConsistencyError,
    InvalidArgument,
    IoError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::BehindCamera: return "BehindCamera";
        case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
        case ErrorCode::LastKeyframeRemoval: return "LastKeyframeRemoval";
        case ErrorCode::UnknownEntity: return "UnknownEntity";
        case ErrorCode::EntityNeverVisible: return "EntityNeverVisible";
        case ErrorCode::EmptyCloud: return "EmptyCloud";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::TOutOfRange: return "TOutOfRange";
        case ErrorCode::NoValidPairs: return "NoValidPairs";
        case ErrorCode::EmptyRegion: return "EmptyRegion";
        case ErrorCode::SchemaVersionUnsupported: return "SchemaVersionUnsupported";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DepthOverflow: return "DepthOverflow";
        case ErrorCode::FieldCountError: return "FieldCountError";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::ConsistencyError: return "ConsistencyError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// The description without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

} // namespace cineforge
