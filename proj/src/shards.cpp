#include "shards.hpp"

#include "codec.hpp"
#include "error.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace trafficlm::shards {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'T', 'G', 'T', 'K'};

void put_u32le(std::ofstream& out, std::uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                   static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(buf, 4);
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_shard(const std::string& path, const TokenSeq& tokens) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "shards.write_shard", "cannot open " + path + " for writing");
    out.write(kMagic, 4);
    put_u32le(out, kShardVersion);
    put_u32le(out, static_cast<std::uint32_t>(codec::kVocabSize));
    put_u32le(out, 0);
    std::vector<unsigned char> payload(tokens.size() * 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        payload[2 * i] = static_cast<unsigned char>(tokens[i] & 0xFF);
        payload[2 * i + 1] = static_cast<unsigned char>(tokens[i] >> 8);
    }
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) fail(Errc::IoError, "shards.write_shard", "short write to " + path);
}

TokenSeq read_shard(const std::string& path) {
    static constexpr const char* kOp = "shards.read_shard";
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::IoError, kOp, "cannot open " + path);

    unsigned char header[16];
    in.read(reinterpret_cast<char*>(header), 16);
    if (in.gcount() != 16 || std::memcmp(header, kMagic, 4) != 0) {
        fail(Errc::UnsupportedFormat, kOp, path + " is not a token shard");
    }
    const std::uint32_t version = get_u32le(header + 4);
    const std::uint32_t vocab = get_u32le(header + 8);
    if (version != kShardVersion) fail(Errc::UnsupportedFormat, kOp, "unsupported shard version");
    if (vocab != static_cast<std::uint32_t>(codec::kVocabSize)) {
        fail(Errc::UnsupportedFormat, kOp, "shard vocabulary size mismatch");
    }

    std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (payload.size() % 2 != 0) fail(Errc::TruncatedCapture, kOp, "odd shard payload length");
    TokenSeq tokens(payload.size() / 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        tokens[i] = static_cast<TokenId>(payload[2 * i] | (payload[2 * i + 1] << 8));
    }
    return tokens;
}

CorpusManifest write_corpus(const std::string& dir, const std::vector<TokenSeq>& flows,
                            std::uint64_t max_tokens_per_shard) {
    fs::create_directories(dir);

    CorpusManifest manifest;
    TokenSeq current;
    std::uint64_t current_flows = 0;
    int shard_index = 0;

    auto flush = [&]() {
        if (current.empty()) return;
        std::ostringstream name;
        name << "shard-" << std::setw(4) << std::setfill('0') << shard_index++ << kShardExtension;
        write_shard((fs::path(dir) / name.str()).string(), current);
        manifest.entries.push_back({name.str(), current.size(), current_flows});
        manifest.total_tokens += current.size();
        manifest.total_flows += current_flows;
        current.clear();
        current_flows = 0;
    };

    for (const auto& flow : flows) {
        if (!current.empty() && current.size() + flow.size() > max_tokens_per_shard) flush();
        current.insert(current.end(), flow.begin(), flow.end());
        ++current_flows;
    }
    flush();

    json j;
    j["version"] = kShardVersion;
    j["vocab_size"] = codec::kVocabSize;
    j["total_tokens"] = manifest.total_tokens;
    j["total_flows"] = manifest.total_flows;
    j["shards"] = json::array();
    for (const auto& e : manifest.entries) {
        j["shards"].push_back({{"file", e.file}, {"tokens", e.tokens}, {"flows", e.flows}});
    }
    std::ofstream out(fs::path(dir) / kManifestName);
    if (!out) fail(Errc::IoError, "shards.write_corpus", "cannot write manifest in " + dir);
    out << j.dump(2) << "\n";
    return manifest;
}

CorpusManifest read_manifest(const std::string& dir) {
    static constexpr const char* kOp = "shards.read_manifest";
    const fs::path path = fs::path(dir) / kManifestName;
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, kOp, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(Errc::ConfigError, kOp, std::string("manifest parse error: ") + e.what());
    }
    CorpusManifest manifest;
    manifest.total_tokens = j.value("total_tokens", 0ull);
    manifest.total_flows = j.value("total_flows", 0ull);
    for (const auto& e : j.at("shards")) {
        manifest.entries.push_back({e.at("file").get<std::string>(), e.at("tokens").get<std::uint64_t>(),
                                    e.at("flows").get<std::uint64_t>()});
    }
    return manifest;
}

std::vector<TokenSeq> split_flows_from_stream(const TokenSeq& stream) {
    std::vector<TokenSeq> flows;
    TokenSeq current;
    for (TokenId id : stream) {
        current.push_back(id);
        if (id == codec::kTokenFlowEnd) {
            flows.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        fail(Errc::UnterminatedFlow, "shards.split_flows_from_stream",
             "shard stream ends mid-flow (" + std::to_string(current.size()) + " trailing tokens)");
    }
    return flows;
}

std::vector<TokenSeq> load_corpus_flows(const std::string& dir) {
    const auto manifest = read_manifest(dir);
    std::vector<TokenSeq> flows;
    for (const auto& entry : manifest.entries) {
        const auto stream = read_shard((fs::path(dir) / entry.file).string());
        for (auto& flow : split_flows_from_stream(stream)) flows.push_back(std::move(flow));
    }
    return flows;
}

}  // namespace trafficlm::shards
