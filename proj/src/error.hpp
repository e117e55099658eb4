#pragma once

#include <stdexcept>
#include <string>

namespace trafficlm {

// Error codes shared across the library. The C API maps these onto
// trafficlm_status values; the CLI maps them onto exit codes.
enum class Errc {
    // container / capture
    UnsupportedFormat,
    TruncatedCapture,
    TimestampOverflow,
    FieldOutOfRange,
    // token codec
    InvalidInterval,
    LinktypeNotEncodable,
    EmptyFlow,
    UnterminatedFlow,
    TruncatedPacket,
    IllegalTokenInBody,
    // numerics
    NumericDomain,
    DegenerateNormalizer,
    ShapeError,
    InvalidDecay,
    DivergenceDetected,
    // model / training
    WindowOverflow,
    EmptyBatch,
    LabelOverflow,
    WindowTooSmall,
    EmptyClass,
    // generation
    AbortedFlow,
    InvalidPrompt,
    // metrics
    NotADistribution,
    EmptyInput,
    // plumbing
    ConfigError,
    IoError,
};

const char* errc_name(Errc code);

// Library-wide exception. `op` names the failing operation
// ("pcap.read_pcap", "lm.train", ...) so that surfaced errors are
// attributable without a debugger.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string op, const std::string& message)
        : std::runtime_error(op + ": " + message + " (" + errc_name(code) + ")"),
          code_(code),
          op_(std::move(op)) {}

    Errc code() const noexcept { return code_; }
    const std::string& op() const noexcept { return op_; }

private:
    Errc code_;
    std::string op_;
};

[[noreturn]] inline void fail(Errc code, const std::string& op, const std::string& message) {
    throw Error(code, op, message);
}

}  // namespace trafficlm
