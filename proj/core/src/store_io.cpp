#include "engram/store_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace engram {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kSidecarMagic[4] = {'E', 'G', 'R', 'V'};
constexpr std::uint32_t kSidecarVersion = 1;
constexpr int kFormatVersion = 1;

std::string jsonl(const json& records) {
    std::string out;
    for (const auto& rec : records) {
        out += rec.dump();
        out += '\n';
    }
    return out;
}

json parse_jsonl(const std::string& text, const std::string& segment) {
    json arr = json::array();
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            throw StoreFormatError(segment + ": invalid JSON on line " + std::to_string(lineno));
        arr.push_back(std::move(rec));
    }
    return arr;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StoreFormatError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreFormatError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sidecar_bytes(const VectorStore& vectors) {
    std::string out;
    out.append(kSidecarMagic, 4);
    auto put_u32 = [&out](std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); };
    auto put_u64 = [&out](std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); };
    put_u32(kSidecarVersion);
    put_u32(static_cast<std::uint32_t>(vectors.dim()));
    put_u64(static_cast<std::uint64_t>(vectors.size()));
    const auto& raw = vectors.raw();
    out.append(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(float));
    return out;
}

void parse_sidecar(const std::string& bytes, VectorStore& vectors) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kSidecarMagic, 4) != 0)
        throw TruncatedSidecarError("embeddings.bin: missing or corrupt header");
    std::uint32_t version, dim;
    std::uint64_t count;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&dim, bytes.data() + 8, 4);
    std::memcpy(&count, bytes.data() + 12, 8);
    if (version != kSidecarVersion)
        throw VersionMismatchError("embeddings.bin: unsupported sidecar version " + std::to_string(version));
    const std::size_t expected = 20 + static_cast<std::size_t>(count) * dim * sizeof(float);
    if (bytes.size() != expected)
        throw TruncatedSidecarError("embeddings.bin: expected " + std::to_string(expected) + " bytes, found " +
                                    std::to_string(bytes.size()));
    std::vector<float> data(static_cast<std::size_t>(count) * dim);
    std::memcpy(data.data(), bytes.data() + 20, data.size() * sizeof(float));
    vectors.assign_raw(static_cast<int>(dim), std::move(data));
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename Segments>
std::string chained_fingerprint(const Segments& segments) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const std::string* segment : segments) h = fnv1a64(*segment, h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes, std::uint64_t seed) {
    const std::uint64_t h = fnv1a64(bytes, seed);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json StoreManifest::to_json() const {
    json levels = json::object();
    for (const auto& [level, count] : tree_nodes_per_level) levels[std::to_string(level)] = count;
    return json{
        {"format_version", format_version},
        {"embedding_dim", embedding_dim},
        {"level_schedule", level_schedule},
        {"scoring", scoring},
        {"counts",
         {{"fragments", fragments},
          {"events", events},
          {"entities", entities},
          {"semantic_edges", semantic_edges},
          {"overlap_edges", overlap_edges},
          {"tree_nodes_per_level", levels},
          {"embeddings", embeddings}}},
        {"fingerprint", fingerprint},
    };
}

StoreManifest StoreManifest::from_json(const json& j) {
    StoreManifest m;
    m.format_version = j.at("format_version").get<int>();
    m.embedding_dim = j.at("embedding_dim").get<int>();
    m.level_schedule = j.value("level_schedule", json::array());
    m.scoring = j.value("scoring", json::object());
    const auto& counts = j.at("counts");
    m.fragments = counts.at("fragments").get<std::int64_t>();
    m.events = counts.at("events").get<std::int64_t>();
    m.entities = counts.at("entities").get<std::int64_t>();
    m.semantic_edges = counts.at("semantic_edges").get<std::int64_t>();
    m.overlap_edges = counts.at("overlap_edges").get<std::int64_t>();
    for (const auto& [k, v] : counts.at("tree_nodes_per_level").items())
        m.tree_nodes_per_level[std::stoi(k)] = v.get<std::int64_t>();
    m.embeddings = counts.at("embeddings").get<std::int64_t>();
    m.fingerprint = j.at("fingerprint").get<std::string>();
    return m;
}

json StoreStats::to_json() const {
    json levels = json::object();
    for (const auto& [level, count] : tree_nodes_per_level) levels[std::to_string(level)] = count;
    return json{
        {"fragments", fragments},       {"events", events},
        {"entities", entities},         {"semantic_edges", semantic_edges},
        {"overlap_edges", overlap_edges}, {"tree_nodes_per_level", levels},
        {"embeddings", embeddings},
    };
}

std::string StoreStats::to_table() const {
    std::ostringstream out;
    out << "fragments        " << fragments << "\n";
    out << "events           " << events << "\n";
    for (const auto& [level, count] : tree_nodes_per_level)
        out << "tree level " << level << "     " << count << "\n";
    out << "entities         " << entities << "\n";
    out << "semantic edges   " << semantic_edges << "\n";
    out << "overlap edges    " << overlap_edges << "\n";
    out << "embeddings       " << embeddings << "\n";
    return out.str();
}

StoreStats live_stats(const MemoryStore& store, const TreeIndex& tree, const GraphIndex& graph) {
    StoreStats s;
    s.fragments = static_cast<std::int64_t>(store.fragments().size());
    s.events = static_cast<std::int64_t>(store.events().size());
    s.entities = static_cast<std::int64_t>(graph.entities().size());
    s.semantic_edges = graph.semantic_edge_count();
    s.overlap_edges = graph.overlap_edge_count();
    s.tree_nodes_per_level = tree.level_counts();
    s.embeddings = static_cast<std::int64_t>(store.vectors().size());
    return s;
}

StoreManifest save_store(const std::string& dir, const MemoryStore& store, const TreeIndex& tree,
                         const GraphIndex& graph, const EngineConfig& cfg) {
    fs::create_directories(dir);
    const std::string fragments = jsonl(store.dump_fragments());
    const std::string events = jsonl(store.dump_events());
    const json tree_dump = tree.dump();
    const std::string tree_nodes = jsonl(tree_dump.at("nodes"));
    const json graph_dump = graph.dump();
    const std::string entities = jsonl(graph_dump.at("entities"));
    const std::string edges = jsonl(graph_dump.at("edges"));
    const std::string sidecar = sidecar_bytes(store.vectors());

    // Fingerprint over the canonical dumps in fixed segment order.
    const std::string fingerprint = chained_fingerprint(
        std::initializer_list<const std::string*>{&fragments, &events, &tree_nodes, &entities, &edges, &sidecar});

    StoreManifest manifest;
    manifest.format_version = kFormatVersion;
    manifest.embedding_dim = store.vectors().dim() == 0 ? cfg.embedding_dim : store.vectors().dim();
    manifest.level_schedule = cfg.to_json().at("levels");
    manifest.scoring = cfg.to_json().at("scoring");
    const StoreStats stats = live_stats(store, tree, graph);
    manifest.fragments = stats.fragments;
    manifest.events = stats.events;
    manifest.entities = stats.entities;
    manifest.semantic_edges = stats.semantic_edges;
    manifest.overlap_edges = stats.overlap_edges;
    manifest.tree_nodes_per_level = stats.tree_nodes_per_level;
    manifest.embeddings = stats.embeddings;
    manifest.fingerprint = fingerprint;

    write_file(fs::path(dir) / "fragments.jsonl", fragments);
    write_file(fs::path(dir) / "events.jsonl", events);
    write_file(fs::path(dir) / "tree.jsonl", tree_nodes);
    write_file(fs::path(dir) / "entities.jsonl", entities);
    write_file(fs::path(dir) / "edges.jsonl", edges);
    write_file(fs::path(dir) / "embeddings.bin", sidecar);
    write_file(fs::path(dir) / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

LoadedStore load_store(const std::string& dir, const EngineConfig& cfg) {
    const fs::path root(dir);
    if (!fs::exists(root / "manifest.json")) throw StoreFormatError("no manifest.json under " + dir);
    const json mj = json::parse(read_file(root / "manifest.json"));
    StoreManifest manifest = StoreManifest::from_json(mj);
    if (manifest.format_version != kFormatVersion)
        throw VersionMismatchError("store format version " + std::to_string(manifest.format_version) +
                                   " is not supported (expected " + std::to_string(kFormatVersion) + ")");
    if (manifest.embedding_dim != cfg.embedding_dim)
        throw VersionMismatchError("store embedding_dim " + std::to_string(manifest.embedding_dim) +
                                   " does not match configured " + std::to_string(cfg.embedding_dim));

    const std::string fragments = read_file(root / "fragments.jsonl");
    const std::string events = read_file(root / "events.jsonl");
    const std::string tree_nodes = read_file(root / "tree.jsonl");
    const std::string entities = read_file(root / "entities.jsonl");
    const std::string edges = read_file(root / "edges.jsonl");
    const std::string sidecar = read_file(root / "embeddings.bin");

    const std::string fingerprint = chained_fingerprint(
        std::initializer_list<const std::string*>{&fragments, &events, &tree_nodes, &entities, &edges, &sidecar});

    LoadedStore loaded{MemoryStore{}, TreeIndex{cfg.levels, cfg.retrieval.adjacent_window_candidates},
                       GraphIndex{cfg.graph}, manifest};
    parse_sidecar(sidecar, loaded.store.vectors());
    if (fingerprint != manifest.fingerprint)
        throw FingerprintMismatchError("store fingerprint mismatch: manifest " + manifest.fingerprint +
                                       ", computed " + fingerprint);

    loaded.store.load_fragments(parse_jsonl(fragments, "fragments.jsonl"));
    loaded.store.load_events(parse_jsonl(events, "events.jsonl"));
    loaded.graph = GraphIndex::from_dump(
        json{{"entities", parse_jsonl(entities, "entities.jsonl")}, {"edges", parse_jsonl(edges, "edges.jsonl")}},
        cfg.graph);
    const MemoryStore& store_ref = loaded.store;
    loaded.tree = TreeIndex::from_dump(
        json{{"nodes", parse_jsonl(tree_nodes, "tree.jsonl")}}, cfg.levels,
        cfg.retrieval.adjacent_window_candidates, [&store_ref](const std::string& event_id) {
            const MemoryEvent* ev = store_ref.event(event_id);
            if (!ev || ev->embedding_id < 0)
                throw StoreFormatError("tree.jsonl: leaf references event without embedding: " + event_id);
            return store_ref.vectors().get(ev->embedding_id);
        });

    // Manifest counts must equal live recounts.
    const StoreStats stats = live_stats(loaded.store, loaded.tree, loaded.graph);
    if (stats.fragments != manifest.fragments || stats.events != manifest.events ||
        stats.entities != manifest.entities || stats.semantic_edges != manifest.semantic_edges ||
        stats.overlap_edges != manifest.overlap_edges || stats.embeddings != manifest.embeddings ||
        stats.tree_nodes_per_level != manifest.tree_nodes_per_level)
        throw StoreFormatError("manifest counts do not match live recounts");
    return loaded;
}

std::int64_t store_size_bytes(const std::string& dir) {
    std::int64_t total = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) total += static_cast<std::int64_t>(entry.file_size());
    return total;
}

}  // namespace engram
