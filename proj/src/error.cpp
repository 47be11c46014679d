#include <deckfuse/error.hpp>

namespace deckfuse
{

std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::MalformedHeader:
        return "MalformedHeader";
    case ErrorCode::TruncatedPayload:
        return "TruncatedPayload";
    case ErrorCode::UnsupportedMaxval:
        return "UnsupportedMaxval";
    case ErrorCode::OutOfRange:
        return "OutOfRange";
    case ErrorCode::PreconditionViolation:
        return "PreconditionViolation";
    case ErrorCode::DimensionMismatch:
        return "DimensionMismatch";
    case ErrorCode::DegenerateInput:
        return "DegenerateInput";
    case ErrorCode::EmptyInput:
        return "EmptyInput";
    case ErrorCode::FootprintUnbounded:
        return "FootprintUnbounded";
    case ErrorCode::CorruptStore:
        return "CorruptStore";
    case ErrorCode::IoFailure:
        return "IoFailure";
    case ErrorCode::MissingFile:
        return "MissingFile";
    case ErrorCode::DuplicateId:
        return "DuplicateId";
    case ErrorCode::NotFound:
        return "NotFound";
    case ErrorCode::InvalidManifest:
        return "InvalidManifest";
    case ErrorCode::PortInUse:
        return "PortInUse";
    }
    return "Unknown";
}

} // namespace deckfuse
