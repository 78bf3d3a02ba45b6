#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "engram/config.hpp"
#include "engram/engine.hpp"
#include "engram/evaluation.hpp"

namespace engram {

struct QAItem {
    std::string question;
    std::string gold_answer;
    std::string category;  // passes through verbatim; no closed set
    std::string conversation_id;
    std::optional<UnixSeconds> question_time;
};

struct RawConversation {
    std::string id;
    std::vector<nlohmann::json> fragments;  // raw ingest records
};

struct Dataset {
    std::vector<RawConversation> conversations;
    std::vector<QAItem> questions;

    static Dataset from_json(const nlohmann::json& j);
    static Dataset load_file(const std::string& path);
};

struct CategoryMetrics {
    std::int64_t questions = 0;
    double f1_sum = 0.0;
    std::int64_t judge_correct = 0;
    std::int64_t judge_parse_failures = 0;

    double f1_mean() const { return questions ? f1_sum / static_cast<double>(questions) : 0.0; }
    double judge_accuracy() const {
        return questions ? static_cast<double>(judge_correct) / static_cast<double>(questions) : 0.0;
    }
};

// One evaluated configuration (one k). Cost metrics: indexing time, indexing
// tokens, index storage bytes, retrieval latency, retrieval tokens — all
// taken from the ledger and saved stores, never from direct wall clocks, so
// mock-mode reports are byte-identical across runs.
struct EvalRow {
    int top_k = 0;
    std::map<std::string, CategoryMetrics> per_category;
    CategoryMetrics overall;
    std::int64_t skipped = 0;

    std::int64_t indexing_ms = 0;
    std::int64_t indexing_tokens = 0;
    std::int64_t index_storage_bytes = 0;
    std::int64_t retrieval_ms = 0;
    std::int64_t retrieval_tokens = 0;
    std::int64_t generate_tokens = 0;
    std::int64_t judge_tokens = 0;
    std::int64_t gathered_candidates = 0;
    std::int64_t follow_up_rounds = 0;

    nlohmann::json to_json() const;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::string config_hash;
    std::string provider_mode;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

struct EvalOptions {
    std::vector<int> sweep_k;        // empty: single run at cfg.retrieval.top_k
    std::string store_root;          // empty: temp directory
    int question_parallelism = 0;    // 0: provider parallelism
};

// Indexes every conversation, answers every question at its question_time,
// scores token F1 (on the simplified answer) and the LLM judge (on the raw
// answer), and aggregates per category and overall.
EvalReport run_eval(const Dataset& dataset, const EngineConfig& cfg, const EvalOptions& opts = {});

}  // namespace engram
