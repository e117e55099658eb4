#pragma once

#include "common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace trafficlm::shards {

// Flat binary shard: 16-byte header (magic "TGTK", u32 version, u32 vocab
// size, u32 reserved) followed by unsigned 16-bit little-endian token ids.
constexpr std::uint32_t kShardVersion = 1;
constexpr const char* kShardExtension = ".tgtk";
constexpr const char* kManifestName = "manifest.json";

void write_shard(const std::string& path, const TokenSeq& tokens);
TokenSeq read_shard(const std::string& path);

struct ShardEntry {
    std::string file;  // relative to the corpus directory
    std::uint64_t tokens = 0;
    std::uint64_t flows = 0;
};

struct CorpusManifest {
    std::vector<ShardEntry> entries;
    std::uint64_t total_tokens = 0;
    std::uint64_t total_flows = 0;
};

// Packs flow token sequences into shards under `dir` and writes the JSON
// manifest. A flow is never split across shards.
CorpusManifest write_corpus(const std::string& dir, const std::vector<TokenSeq>& flows,
                            std::uint64_t max_tokens_per_shard = 1u << 20);

CorpusManifest read_manifest(const std::string& dir);

// Splits a concatenated shard stream back into per-flow sequences
// (each ending with FLOW_END).
std::vector<TokenSeq> split_flows_from_stream(const TokenSeq& stream);

// Loads every flow of every shard listed in the manifest.
std::vector<TokenSeq> load_corpus_flows(const std::string& dir);

}  // namespace trafficlm::shards
