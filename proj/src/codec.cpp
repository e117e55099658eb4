#include "codec.hpp"

#include "error.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace trafficlm::codec {

std::array<std::uint8_t, 8> encode_interval(double delta_seconds) {
    if (!std::isfinite(delta_seconds) || delta_seconds < 0.0) {
        fail(Errc::InvalidInterval, "codec.encode_interval",
             "interval must be finite and non-negative, got " + std::to_string(delta_seconds));
    }
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(delta_seconds);
    std::array<std::uint8_t, 8> out{};
    for (int i = 0; i < 8; ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((bits >> (56 - 8 * i)) & 0xFF);
    }
    return out;
}

double decode_interval(const std::array<std::uint8_t, 8>& bytes) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits = (bits << 8) | bytes[static_cast<std::size_t>(i)];
    }
    return std::bit_cast<double>(bits);
}

TokenSeq tokenize_flow(const pcap::Flow& flow) {
    static constexpr const char* kOp = "codec.tokenize_flow";
    if (flow.packets.empty()) fail(Errc::EmptyFlow, kOp, "flow has no packets");

    TokenSeq tokens;
    std::size_t total = 1;
    for (const auto& p : flow.packets) total += kPacketPrefixTokens + p.bytes.size();
    tokens.reserve(total);

    std::int64_t prev_usec = flow.packets.front().ts_usec;
    for (const auto& packet : flow.packets) {
        if (packet.linktype > 255) {
            fail(Errc::LinktypeNotEncodable, kOp,
                 "linktype " + std::to_string(packet.linktype) + " does not fit one byte token");
        }
        tokens.push_back(kTokenPktStart);
        tokens.push_back(static_cast<TokenId>(packet.linktype));

        // First packet's interval is zero by convention.
        const double delta = static_cast<double>(packet.ts_usec - prev_usec) * 1e-6;
        prev_usec = packet.ts_usec;
        for (std::uint8_t b : encode_interval(delta)) tokens.push_back(b);

        for (std::uint8_t b : packet.bytes) tokens.push_back(b);
    }
    tokens.push_back(kTokenFlowEnd);
    return tokens;
}

pcap::Flow detokenize_flow(const TokenSeq& tokens, std::int64_t base_time_usec,
                           std::optional<std::uint32_t> linktype_override) {
    static constexpr const char* kOp = "codec.detokenize_flow";

    if (const auto violation = validate_token_grammar(tokens)) {
        // Map grammar failures onto the decoder's error vocabulary.
        if (violation->rule == "missing FLOW_END terminator") {
            fail(Errc::UnterminatedFlow, kOp, violation->rule);
        }
        if (violation->rule == "packet shorter than prefix plus one payload byte") {
            fail(Errc::TruncatedPacket, kOp,
                 "packet truncated at token " + std::to_string(violation->position));
        }
        if (violation->rule == "CLS/PAD inside flow body") {
            fail(Errc::IllegalTokenInBody, kOp,
                 "special token at position " + std::to_string(violation->position));
        }
        fail(Errc::IllegalTokenInBody, kOp,
             violation->rule + " at position " + std::to_string(violation->position));
    }

    pcap::Flow flow;
    double cumulative_seconds = 0.0;
    std::size_t i = 0;
    while (tokens[i] != kTokenFlowEnd) {
        // validate_token_grammar guarantees the layout from here on.
        ++i;  // PKT_START
        pcap::PacketRecord packet;
        packet.linktype = linktype_override.value_or(static_cast<std::uint32_t>(tokens[i]));
        ++i;

        std::array<std::uint8_t, 8> interval_bytes{};
        for (int b = 0; b < 8; ++b) interval_bytes[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(tokens[i++]);
        const double delta = decode_interval(interval_bytes);
        if (!std::isfinite(delta) || delta < 0.0) {
            fail(Errc::InvalidInterval, kOp, "decoded inter-arrival time is not a finite non-negative value");
        }
        cumulative_seconds += delta;
        const double offset_usec = cumulative_seconds * 1e6;
        if (!(offset_usec < 9.0e18)) {
            fail(Errc::TimestampOverflow, kOp, "cumulative inter-arrival time too large");
        }
        packet.ts_usec = base_time_usec + std::llround(offset_usec);

        while (is_byte_token(tokens[i])) {
            packet.bytes.push_back(static_cast<std::uint8_t>(tokens[i]));
            ++i;
        }
        flow.packets.push_back(std::move(packet));
    }
    return flow;
}

std::optional<GrammarViolation> validate_token_grammar(const TokenSeq& tokens) {
    if (tokens.empty()) return GrammarViolation{0, "expected PKT_START"};
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] >= kVocabSize) return GrammarViolation{i, "token id out of vocabulary"};
    }
    if (tokens[0] == kTokenFlowEnd) return GrammarViolation{0, "empty flow"};
    if (tokens[0] != kTokenPktStart) return GrammarViolation{0, "expected PKT_START"};

    std::size_t i = 0;
    while (i < tokens.size() && tokens[i] == kTokenPktStart) {
        const std::size_t start = i;
        ++i;
        // linktype byte + 8 interval bytes + at least one payload byte.
        for (int need = 0; need < kPacketPrefixTokens - 1; ++need) {
            if (i >= tokens.size() || !is_byte_token(tokens[i])) {
                if (i < tokens.size() && (tokens[i] == kTokenCls || tokens[i] == kTokenPad)) {
                    return GrammarViolation{i, "CLS/PAD inside flow body"};
                }
                return GrammarViolation{std::min(i, tokens.size()),
                                        "packet shorter than prefix plus one payload byte"};
            }
            ++i;
        }
        std::size_t payload = 0;
        while (i < tokens.size() && is_byte_token(tokens[i])) {
            ++payload;
            ++i;
        }
        if (payload == 0) {
            if (i < tokens.size() && (tokens[i] == kTokenCls || tokens[i] == kTokenPad)) {
                return GrammarViolation{i, "CLS/PAD inside flow body"};
            }
            return GrammarViolation{std::min(i, tokens.size()),
                                    "packet shorter than prefix plus one payload byte"};
        }
        if (i >= tokens.size()) return GrammarViolation{tokens.size(), "missing FLOW_END terminator"};
        if (tokens[i] == kTokenCls || tokens[i] == kTokenPad) {
            return GrammarViolation{i, "CLS/PAD inside flow body"};
        }
        if (tokens[i] == kTokenFlowEnd) {
            if (i + 1 != tokens.size()) return GrammarViolation{i + 1, "tokens after FLOW_END"};
            return std::nullopt;
        }
        (void)start;
    }
    return GrammarViolation{std::min(i, tokens.size()), "missing FLOW_END terminator"};
}

std::vector<std::size_t> packet_starts(const TokenSeq& tokens) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == kTokenPktStart) starts.push_back(i);
    }
    return starts;
}

}  // namespace trafficlm::codec
