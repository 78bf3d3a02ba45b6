#pragma once
#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

#include "engram/config.hpp"
#include "engram/graph.hpp"
#include "engram/store.hpp"
#include "engram/tree.hpp"

namespace engram {

class StoreFormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class VersionMismatchError : public StoreFormatError {
    using StoreFormatError::StoreFormatError;
};
class FingerprintMismatchError : public StoreFormatError {
    using StoreFormatError::StoreFormatError;
};
class TruncatedSidecarError : public StoreFormatError {
    using StoreFormatError::StoreFormatError;
};

struct StoreManifest {
    int format_version = 1;
    int embedding_dim = 0;
    nlohmann::json level_schedule;
    nlohmann::json scoring;
    std::int64_t fragments = 0;
    std::int64_t events = 0;
    std::int64_t entities = 0;
    std::int64_t semantic_edges = 0;
    std::int64_t overlap_edges = 0;
    std::map<int, std::int64_t> tree_nodes_per_level;
    std::int64_t embeddings = 0;
    std::string fingerprint;

    nlohmann::json to_json() const;
    static StoreManifest from_json(const nlohmann::json& j);
};

struct StoreStats {
    std::int64_t fragments = 0;
    std::int64_t events = 0;
    std::int64_t entities = 0;
    std::int64_t semantic_edges = 0;
    std::int64_t overlap_edges = 0;
    std::map<int, std::int64_t> tree_nodes_per_level;
    std::int64_t embeddings = 0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

StoreStats live_stats(const MemoryStore& store, const TreeIndex& tree, const GraphIndex& graph);

// Layout: one directory with manifest.json, JSONL segments per record kind,
// and a binary embedding sidecar (magic/version/dim/count header, row-major
// float32). Returns the manifest that was written.
StoreManifest save_store(const std::string& dir, const MemoryStore& store, const TreeIndex& tree,
                         const GraphIndex& graph, const EngineConfig& cfg);

struct LoadedStore {
    MemoryStore store;
    TreeIndex tree;
    GraphIndex graph;
    StoreManifest manifest;
};

// Verifies format version, embedding dimension, fingerprint, and counts;
// each failure raises its own error type.
LoadedStore load_store(const std::string& dir, const EngineConfig& cfg);

// Total bytes of the store directory's files.
std::int64_t store_size_bytes(const std::string& dir);

// FNV-1a 64 content hash, hex-encoded.
std::string fnv1a_hex(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace engram
