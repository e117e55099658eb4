#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trafficlm::pcap {

constexpr std::uint32_t kLinktypeEthernet = 1;
constexpr std::uint32_t kLinktypeSll = 113;

constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;

enum class Direction : std::uint8_t { unset, outgoing, incoming };

struct PacketRecord {
    std::int64_t ts_usec = 0;  // microseconds since epoch
    std::uint32_t linktype = kLinktypeEthernet;
    std::vector<std::uint8_t> bytes;
    Direction direction = Direction::unset;

    double seconds() const { return static_cast<double>(ts_usec) * 1e-6; }
};

struct Endpoint {
    std::uint32_t addr = 0;  // IPv4, host order
    std::uint16_t port = 0;

    friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

// Canonical 5-tuple: endpoints are ordered so both directions of a
// conversation share one key.
struct FiveTuple {
    Endpoint lo;
    Endpoint hi;
    std::uint8_t protocol = 0;

    friend auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
};

std::string endpoint_to_string(const Endpoint& ep);
std::string five_tuple_to_string(const FiveTuple& key);

struct Flow {
    FiveTuple key;
    Endpoint initiator;  // source endpoint of the first captured packet
    std::vector<PacketRecord> packets;
};

struct Capture {
    std::uint32_t linktype = kLinktypeEthernet;
    std::vector<PacketRecord> records;
};

// Classic pcap only (magic 0xA1B2C3D4 in either byte order, microsecond
// timestamps). Nanosecond captures and pcapng are rejected.
Capture read_pcap(std::istream& in);
Capture read_pcap_file(const std::string& path);

std::vector<std::uint8_t> write_pcap(std::uint32_t linktype,
                                     const std::vector<PacketRecord>& records);
void write_pcap_file(const std::string& path, std::uint32_t linktype,
                     const std::vector<PacketRecord>& records);

// Lenient single-frame view used by flow splitting, anonymization and the
// header metrics. Offsets are into the frame buffer.
struct ParsedFrame {
    bool has_ipv4 = false;
    std::size_t ip_offset = 0;
    std::uint8_t ip_header_len = 0;  // bytes
    std::uint8_t protocol = 0;
    std::uint8_t ttl = 0;
    std::uint32_t src_addr = 0;
    std::uint32_t dst_addr = 0;
    bool has_ports = false;
    std::size_t l4_offset = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
};

// Returns the parse result, or an explanation of why the frame is not an
// IPv4 TCP/UDP frame (used for drop accounting).
struct FrameParseOutcome {
    std::optional<ParsedFrame> frame;
    std::string drop_reason;  // set when frame is empty
};
FrameParseOutcome parse_frame(std::uint32_t linktype, const std::vector<std::uint8_t>& bytes);

struct SplitStats {
    std::size_t kept_packets = 0;
    std::size_t dropped_packets = 0;
    std::map<std::string, std::size_t> dropped_by_reason;
};

// Groups TCP/UDP packets into bidirectional flows under the canonical
// 5-tuple. Everything else is dropped and counted, never an error.
std::vector<Flow> split_flows(std::uint32_t linktype,
                              const std::vector<PacketRecord>& records,
                              SplitStats* stats = nullptr);

enum AnonField : unsigned {
    kAnonMac = 1u << 0,
    kAnonIp = 1u << 1,
    kAnonPorts = 1u << 2,
};

unsigned parse_anon_policy(const std::string& csv);  // "mac,ip,ports" -> bits

// Overwrites the selected fields with zeros in place in the frame bytes.
// Lengths and checksums are untouched.
Flow anonymize(Flow flow, unsigned policy);
void anonymize_packet(PacketRecord& record, unsigned policy);

}  // namespace trafficlm::pcap
