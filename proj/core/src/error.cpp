#include "tdvim/error.hpp"

namespace tdvim {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::UnsupportedEncoding: return "UnsupportedEncoding";
        case ErrorKind::EmptyAudio: return "EmptyAudio";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::SampleRateMismatch: return "SampleRateMismatch";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::DuplicateKey: return "DuplicateKey";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::EmptyScores: return "EmptyScores";
        case ErrorKind::MissingThreshold: return "MissingThreshold";
        case ErrorKind::IncompletePair: return "IncompletePair";
        case ErrorKind::EmptyTable: return "EmptyTable";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace tdvim
