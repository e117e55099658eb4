#include "error.hpp"

namespace trafficlm {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::TruncatedCapture: return "TruncatedCapture";
        case Errc::TimestampOverflow: return "TimestampOverflow";
        case Errc::FieldOutOfRange: return "FieldOutOfRange";
        case Errc::InvalidInterval: return "InvalidInterval";
        case Errc::LinktypeNotEncodable: return "LinktypeNotEncodable";
        case Errc::EmptyFlow: return "EmptyFlow";
        case Errc::UnterminatedFlow: return "UnterminatedFlow";
        case Errc::TruncatedPacket: return "TruncatedPacket";
        case Errc::IllegalTokenInBody: return "IllegalTokenInBody";
        case Errc::NumericDomain: return "NumericDomain";
        case Errc::DegenerateNormalizer: return "DegenerateNormalizer";
        case Errc::ShapeError: return "ShapeError";
        case Errc::InvalidDecay: return "InvalidDecay";
        case Errc::DivergenceDetected: return "DivergenceDetected";
        case Errc::WindowOverflow: return "WindowOverflow";
        case Errc::EmptyBatch: return "EmptyBatch";
        case Errc::LabelOverflow: return "LabelOverflow";
        case Errc::WindowTooSmall: return "WindowTooSmall";
        case Errc::EmptyClass: return "EmptyClass";
        case Errc::AbortedFlow: return "AbortedFlow";
        case Errc::InvalidPrompt: return "InvalidPrompt";
        case Errc::NotADistribution: return "NotADistribution";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::ConfigError: return "ConfigError";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace trafficlm
