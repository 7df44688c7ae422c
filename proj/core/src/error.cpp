#include "pmlab/error.hpp"

namespace pmlab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidPrice: return "InvalidPrice";
        case ErrorCode::ZeroQuantity: return "ZeroQuantity";
        case ErrorCode::InsufficientCash: return "InsufficientCash";
        case ErrorCode::InsufficientContracts: return "InsufficientContracts";
        case ErrorCode::UnknownOrder: return "UnknownOrder";
        case ErrorCode::UnknownAgent: return "UnknownAgent";
        case ErrorCode::NonpositiveVolatility: return "NonpositiveVolatility";
        case ErrorCode::MissingContextField: return "MissingContextField";
        case ErrorCode::MalformedDocument: return "MalformedDocument";
        case ErrorCode::MissingField: return "MissingField";
        case ErrorCode::OutOfRangeValue: return "OutOfRangeValue";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::ExhaustedRetries: return "ExhaustedRetries";
        case ErrorCode::NoTradeEverOccurred: return "NoTradeEverOccurred";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::NoSignChange: return "NoSignChange";
        case ErrorCode::EmptyLog: return "EmptyLog";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
        case ErrorCode::MixedSchemaVersions: return "MixedSchemaVersions";
        case ErrorCode::MalformedLog: return "MalformedLog";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace pmlab
