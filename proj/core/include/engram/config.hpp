#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "engram/scoring.hpp"
#include "engram/time.hpp"

namespace engram {

enum class ProviderMode { mock, live };

struct ProviderConfig {
    ProviderMode mode = ProviderMode::mock;
    std::string endpoint_url = "http://localhost:8000/v1";
    std::string api_key_env_var = "ENGRAM_API_KEY";
    std::string chat_model = "gpt-4o-mini";
    std::string embed_model = "qwen3-embedding";
    std::string rerank_model;           // empty = pass-through reranker
    std::string rerank_endpoint_url;    // empty = endpoint_url
    std::int64_t timeout_ms = 60000;
    int max_retries = 2;
    double temperature = 0.0;
    int parallelism = 4;                // max in-flight provider calls
    std::uint64_t mock_seed = 42;
    int retry_backoff_ms = 200;         // initial backoff, doubled per retry

    void validate() const;
};

// One tree level: its temporal window unit and the similarity gate for
// attaching a node to an existing parent at this level (unused at level 1).
struct LevelConfig {
    int level = 1;
    WindowUnit unit = WindowUnit::day;
    double alpha = 0.0;
};

struct LevelSchedule {
    std::vector<LevelConfig> levels;

    static LevelSchedule defaults();  // day/week/month/year, alphas 0.8/0.7/0.6
    int max_level() const { return static_cast<int>(levels.size()); }
    const LevelConfig& at(int level) const { return levels.at(static_cast<std::size_t>(level - 1)); }
    void validate() const;  // units strictly coarsen, alphas non-increasing
};

struct GraphConfig {
    double jaccard_threshold = 0.8;
    double edit_similarity_threshold = 0.9;
    int salience_min_links = 3;
    int recent_facts_cap = 10;
    int persistent_fact_min_reinforcement = 2;
};

struct RetrievalConfig {
    int top_k = 10;
    int hops = 2;
    int fanout = 20;
    int neighbor_window = 5;       // prior fragments shown to the extractor
    int seed_top_n = 5;            // vector-matched seed entities
    double seed_min_cosine = 0.5;
    bool adjacent_window_candidates = false;
    int summary_debounce_growth = 2;  // live mode: regenerate after >= this many new sources
};

struct EngineConfig {
    int embedding_dim = 256;
    ProviderConfig provider;
    LevelSchedule levels = LevelSchedule::defaults();
    ScoringConfig scoring;
    GraphConfig graph;
    RetrievalConfig retrieval;
    std::string prompts_path;  // optional JSON catalog overriding built-in prompts

    void validate() const;

    nlohmann::json to_json() const;
    static EngineConfig from_json(const nlohmann::json& j);
    static EngineConfig load_file(const std::string& path);

    // FNV-1a over the canonical JSON form; keys run metadata.
    std::string content_hash() const;
};

}  // namespace engram
