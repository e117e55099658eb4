#pragma once

#include "common.hpp"
#include "pcap.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace trafficlm::codec {

// 260-symbol alphabet: byte values 0..255 plus four specials.
constexpr TokenId kTokenPktStart = 256;
constexpr TokenId kTokenFlowEnd = 257;
constexpr TokenId kTokenCls = 258;
constexpr TokenId kTokenPad = 259;
constexpr int kVocabSize = 260;

constexpr bool is_byte_token(TokenId id) { return id < 256; }

// Tokens occupied by one packet before its frame bytes:
// PKT_START, linktype byte, 8 interval bytes.
constexpr int kPacketPrefixTokens = 10;

// Big-endian IEEE-754 binary64 of the inter-arrival time in seconds.
std::array<std::uint8_t, 8> encode_interval(double delta_seconds);
double decode_interval(const std::array<std::uint8_t, 8>& bytes);

TokenSeq tokenize_flow(const pcap::Flow& flow);

// Inverse of tokenize_flow. base_time_usec anchors the first packet;
// per-packet deltas are rounded to the nearest microsecond, ties away
// from zero. Frame bytes are reproduced verbatim.
pcap::Flow detokenize_flow(const TokenSeq& tokens, std::int64_t base_time_usec,
                           std::optional<std::uint32_t> linktype_override = std::nullopt);

struct GrammarViolation {
    std::size_t position = 0;
    std::string rule;
};

// Accepts exactly (PKT_START BYTE BYTE{8} BYTE+)+ FLOW_END with nothing
// after the terminator. Returns nullopt when the sequence is well formed.
std::optional<GrammarViolation> validate_token_grammar(const TokenSeq& tokens);

// Token positions of each PKT_START in a well-formed (or prefix) sequence.
std::vector<std::size_t> packet_starts(const TokenSeq& tokens);

}  // namespace trafficlm::codec
