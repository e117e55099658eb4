#include "pcap.hpp"

#include "error.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

namespace trafficlm::pcap {

namespace {

constexpr std::uint32_t kMagicUsec = 0xA1B2C3D4u;
constexpr std::uint32_t kMagicUsecSwapped = 0xD4C3B2A1u;
constexpr std::uint32_t kMagicNsec = 0xA1B23C4Du;
constexpr std::uint32_t kMagicNsecSwapped = 0x4D3CB2A1u;

std::uint32_t load_u32(const std::uint8_t* p, bool swap) {
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    if (swap) v = __builtin_bswap32(v);
    return v;
}

void store_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void store_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

std::uint16_t be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace

std::string endpoint_to_string(const Endpoint& ep) {
    std::ostringstream os;
    os << ((ep.addr >> 24) & 0xFF) << '.' << ((ep.addr >> 16) & 0xFF) << '.' << ((ep.addr >> 8) & 0xFF)
       << '.' << (ep.addr & 0xFF) << ':' << ep.port;
    return os.str();
}

std::string five_tuple_to_string(const FiveTuple& key) {
    std::ostringstream os;
    os << endpoint_to_string(key.lo) << '-' << endpoint_to_string(key.hi) << '/'
       << (key.protocol == kProtoTcp ? "tcp" : key.protocol == kProtoUdp ? "udp" : "other");
    return os.str();
}

Capture read_pcap(std::istream& in) {
    static constexpr const char* kOp = "pcap.read_pcap";

    std::uint8_t header[24];
    in.read(reinterpret_cast<char*>(header), 24);
    if (in.gcount() != 24) fail(Errc::UnsupportedFormat, kOp, "input shorter than a pcap global header");

    const std::uint32_t raw_magic = load_u32(header, false);
    bool swap = false;
    if (raw_magic == kMagicUsec) {
        swap = false;
    } else if (raw_magic == kMagicUsecSwapped) {
        swap = true;
    } else if (raw_magic == kMagicNsec || raw_magic == kMagicNsecSwapped) {
        fail(Errc::UnsupportedFormat, kOp, "nanosecond pcap is not supported");
    } else {
        std::ostringstream os;
        os << "bad magic 0x" << std::hex << raw_magic;
        fail(Errc::UnsupportedFormat, kOp, os.str());
    }

    Capture cap;
    cap.linktype = load_u32(header + 20, swap);

    std::size_t index = 0;
    for (;;) {
        std::uint8_t rec[16];
        in.read(reinterpret_cast<char*>(rec), 16);
        const std::streamsize got = in.gcount();
        if (got == 0) break;
        if (got != 16) {
            fail(Errc::TruncatedCapture, kOp, "record " + std::to_string(index) + ": truncated record header");
        }
        const std::uint32_t ts_sec = load_u32(rec, swap);
        const std::uint32_t ts_usec = load_u32(rec + 4, swap);
        const std::uint32_t incl_len = load_u32(rec + 8, swap);
        if (incl_len == 0) {
            fail(Errc::TruncatedCapture, kOp, "record " + std::to_string(index) + ": zero captured length");
        }

        PacketRecord record;
        record.linktype = cap.linktype;
        record.ts_usec = static_cast<std::int64_t>(ts_sec) * 1000000 + static_cast<std::int64_t>(ts_usec);
        record.bytes.resize(incl_len);
        in.read(reinterpret_cast<char*>(record.bytes.data()), incl_len);
        if (static_cast<std::uint32_t>(in.gcount()) != incl_len) {
            fail(Errc::TruncatedCapture, kOp, "record " + std::to_string(index) + ": truncated frame bytes");
        }
        cap.records.push_back(std::move(record));
        ++index;
    }
    return cap;
}

Capture read_pcap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, "pcap.read_pcap", "cannot open " + path);
    return read_pcap(in);
}

std::vector<std::uint8_t> write_pcap(std::uint32_t linktype, const std::vector<PacketRecord>& records) {
    static constexpr const char* kOp = "pcap.write_pcap";

    std::vector<std::uint8_t> out;
    out.reserve(24 + records.size() * 16);
    store_u32le(out, kMagicUsec);
    store_u16le(out, 2);  // version 2.4
    store_u16le(out, 4);
    store_u32le(out, 0);  // thiszone
    store_u32le(out, 0);  // sigfigs
    std::uint32_t snaplen = 65535;
    for (const auto& r : records) snaplen = std::max<std::uint32_t>(snaplen, static_cast<std::uint32_t>(r.bytes.size()));
    store_u32le(out, snaplen);
    store_u32le(out, linktype);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::int64_t sec = r.ts_usec / 1000000;
        const std::int64_t usec = r.ts_usec % 1000000;
        if (r.ts_usec < 0 || sec > 0xFFFFFFFFll) {
            fail(Errc::TimestampOverflow, kOp,
                 "record " + std::to_string(i) + ": timestamp does not fit 32-bit seconds");
        }
        store_u32le(out, static_cast<std::uint32_t>(sec));
        store_u32le(out, static_cast<std::uint32_t>(usec));
        store_u32le(out, static_cast<std::uint32_t>(r.bytes.size()));
        store_u32le(out, static_cast<std::uint32_t>(r.bytes.size()));
        out.insert(out.end(), r.bytes.begin(), r.bytes.end());
    }
    return out;
}

void write_pcap_file(const std::string& path, std::uint32_t linktype,
                     const std::vector<PacketRecord>& records) {
    const auto bytes = write_pcap(linktype, records);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "pcap.write_pcap", "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::IoError, "pcap.write_pcap", "short write to " + path);
}

FrameParseOutcome parse_frame(std::uint32_t linktype, const std::vector<std::uint8_t>& bytes) {
    FrameParseOutcome outcome;

    std::size_t ip_offset = 0;
    if (linktype == kLinktypeEthernet) {
        if (bytes.size() < 14) {
            outcome.drop_reason = "short ethernet frame";
            return outcome;
        }
        const std::uint16_t ethertype = be16(bytes.data() + 12);
        if (ethertype != 0x0800) {
            outcome.drop_reason = "non-ipv4 ethertype";
            return outcome;
        }
        ip_offset = 14;
    } else if (linktype == kLinktypeSll) {
        if (bytes.size() < 16) {
            outcome.drop_reason = "short sll frame";
            return outcome;
        }
        const std::uint16_t proto = be16(bytes.data() + 14);
        if (proto != 0x0800) {
            outcome.drop_reason = "non-ipv4 sll protocol";
            return outcome;
        }
        ip_offset = 16;
    } else {
        outcome.drop_reason = "unsupported linktype";
        return outcome;
    }

    if (bytes.size() < ip_offset + 20) {
        outcome.drop_reason = "truncated ip header";
        return outcome;
    }
    const std::uint8_t* ip = bytes.data() + ip_offset;
    const std::uint8_t version = ip[0] >> 4;
    const std::uint8_t ihl = ip[0] & 0x0F;
    if (version != 4) {
        outcome.drop_reason = "not ipv4";
        return outcome;
    }
    if (ihl < 5 || bytes.size() < ip_offset + static_cast<std::size_t>(ihl) * 4) {
        outcome.drop_reason = "bad ip header length";
        return outcome;
    }

    ParsedFrame frame;
    frame.has_ipv4 = true;
    frame.ip_offset = ip_offset;
    frame.ip_header_len = static_cast<std::uint8_t>(ihl * 4);
    frame.ttl = ip[8];
    frame.protocol = ip[9];
    frame.src_addr = be32(ip + 12);
    frame.dst_addr = be32(ip + 16);

    if (frame.protocol != kProtoTcp && frame.protocol != kProtoUdp) {
        outcome.drop_reason = "non-tcp-udp protocol";
        return outcome;
    }
    const std::uint16_t frag = be16(ip + 6);
    if ((frag & 0x1FFF) != 0) {
        outcome.drop_reason = "ip fragment";
        return outcome;
    }

    frame.l4_offset = ip_offset + frame.ip_header_len;
    if (bytes.size() < frame.l4_offset + 4) {
        outcome.drop_reason = "truncated transport header";
        return outcome;
    }
    frame.has_ports = true;
    frame.src_port = be16(bytes.data() + frame.l4_offset);
    frame.dst_port = be16(bytes.data() + frame.l4_offset + 2);

    outcome.frame = frame;
    return outcome;
}

std::vector<Flow> split_flows(std::uint32_t linktype, const std::vector<PacketRecord>& records,
                              SplitStats* stats) {
    SplitStats local;
    SplitStats& s = stats ? *stats : local;

    std::vector<Flow> flows;
    std::map<FiveTuple, std::size_t> index;

    for (const auto& record : records) {
        const auto outcome = parse_frame(linktype, record.bytes);
        if (!outcome.frame) {
            ++s.dropped_packets;
            ++s.dropped_by_reason[outcome.drop_reason];
            continue;
        }
        const ParsedFrame& f = *outcome.frame;
        const Endpoint src{f.src_addr, f.src_port};
        const Endpoint dst{f.dst_addr, f.dst_port};

        FiveTuple key;
        key.protocol = f.protocol;
        key.lo = std::min(src, dst);
        key.hi = std::max(src, dst);

        auto it = index.find(key);
        if (it == index.end()) {
            Flow flow;
            flow.key = key;
            flow.initiator = src;
            index.emplace(key, flows.size());
            flows.push_back(std::move(flow));
            it = index.find(key);
        }
        Flow& flow = flows[it->second];
        PacketRecord kept = record;
        kept.linktype = linktype;
        kept.direction = (src == flow.initiator) ? Direction::outgoing : Direction::incoming;
        flow.packets.push_back(std::move(kept));
        ++s.kept_packets;
    }

    for (auto& flow : flows) {
        std::stable_sort(flow.packets.begin(), flow.packets.end(),
                         [](const PacketRecord& a, const PacketRecord& b) { return a.ts_usec < b.ts_usec; });
    }
    return flows;
}

unsigned parse_anon_policy(const std::string& csv) {
    unsigned policy = 0;
    std::string token;
    std::istringstream in(csv);
    while (std::getline(in, token, ',')) {
        token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char c) { return std::isspace(c); }),
                    token.end());
        if (token.empty()) continue;
        if (token == "mac") {
            policy |= kAnonMac;
        } else if (token == "ip") {
            policy |= kAnonIp;
        } else if (token == "ports") {
            policy |= kAnonPorts;
        } else {
            fail(Errc::ConfigError, "pcap.anonymize", "unknown anonymization field '" + token + "'");
        }
    }
    return policy;
}

void anonymize_packet(PacketRecord& record, unsigned policy) {
    static constexpr const char* kOp = "pcap.anonymize";
    if (policy == 0) return;

    auto& bytes = record.bytes;
    std::size_t ip_offset = 0;
    if (record.linktype == kLinktypeEthernet) {
        if (policy & kAnonMac) {
            if (bytes.size() < 12) fail(Errc::FieldOutOfRange, kOp, "frame too short for MAC addresses");
            std::fill(bytes.begin(), bytes.begin() + 12, 0);
        }
        ip_offset = 14;
    } else if (record.linktype == kLinktypeSll) {
        if (policy & kAnonMac) {
            if (bytes.size() < 14) fail(Errc::FieldOutOfRange, kOp, "frame too short for SLL address");
            std::fill(bytes.begin() + 6, bytes.begin() + 14, 0);
        }
        ip_offset = 16;
    } else {
        fail(Errc::FieldOutOfRange, kOp, "unsupported linktype for anonymization");
    }

    if (policy & (kAnonIp | kAnonPorts)) {
        if (bytes.size() < ip_offset + 20) fail(Errc::FieldOutOfRange, kOp, "frame too short for IPv4 header");
        const std::uint8_t version = bytes[ip_offset] >> 4;
        const std::uint8_t ihl = bytes[ip_offset] & 0x0F;
        if (version != 4 || ihl < 5) fail(Errc::FieldOutOfRange, kOp, "frame has no IPv4 header");
        if (policy & kAnonIp) {
            std::fill(bytes.begin() + static_cast<std::ptrdiff_t>(ip_offset + 12),
                      bytes.begin() + static_cast<std::ptrdiff_t>(ip_offset + 20), 0);
        }
        if (policy & kAnonPorts) {
            const std::size_t l4 = ip_offset + static_cast<std::size_t>(ihl) * 4;
            if (bytes.size() < l4 + 4) fail(Errc::FieldOutOfRange, kOp, "frame too short for ports");
            std::fill(bytes.begin() + static_cast<std::ptrdiff_t>(l4),
                      bytes.begin() + static_cast<std::ptrdiff_t>(l4 + 4), 0);
        }
    }
}

Flow anonymize(Flow flow, unsigned policy) {
    for (auto& packet : flow.packets) anonymize_packet(packet, policy);
    return flow;
}

}  // namespace trafficlm::pcap
