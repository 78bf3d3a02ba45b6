#pragma once
#include <istream>
#include <memory>
#include <optional>
#include <string>

#include "engram/config.hpp"
#include "engram/extraction.hpp"
#include "engram/graph.hpp"
#include "engram/providers.hpp"
#include "engram/retrieval.hpp"
#include "engram/store.hpp"
#include "engram/store_io.hpp"
#include "engram/tree.hpp"

namespace engram {

struct IngestReport {
    int fragments_ingested = 0;
    int duplicates = 0;
    int events_added = 0;
    int events_reinforced = 0;
    int entities_created = 0;
    int entities_merged = 0;
    int relations_inserted = 0;
    int consolidations = 0;
    int degraded_extractions = 0;
    int overlap_edges_added = 0;

    nlohmann::json to_json() const;
};

// Owns the full hybrid index (store + tree + graph), the provider stack and
// the cost ledger, and wires ingestion and querying end to end.
class MemoryEngine {
public:
    explicit MemoryEngine(EngineConfig cfg);
    MemoryEngine(EngineConfig cfg, ProviderSet providers);  // injection point for tests

    // Ingests one raw record and, when it is new, runs extraction, tree
    // insertion, graph updates and profile maintenance.
    struct RecordOutcome {
        std::string fragment_id;
        bool created = false;
        int events_added = 0;
        int events_reinforced = 0;
        bool degraded = false;
    };
    RecordOutcome add_record(const nlohmann::json& raw);

    // JSON Lines, one record per line; blank lines skipped. Runs overlap
    // repair at the end.
    IngestReport ingest_jsonl(std::istream& in);

    int repair_graph() { return graph_.repair_overlap_edges(); }

    QueryResult query(const std::string& text, UnixSeconds query_time, std::optional<int> k = {},
                      std::optional<MemoryScope> scope_override = {});

    StoreManifest save(const std::string& dir) const;
    static MemoryEngine load(const std::string& dir, EngineConfig cfg);
    static MemoryEngine load(const std::string& dir, EngineConfig cfg, ProviderSet providers);

    double history_age_days() const { return store_.history_age_days(); }
    std::set<int> current_active_levels() const;

    const MemoryStore& store() const { return store_; }
    const TreeIndex& tree() const { return tree_; }
    const GraphIndex& graph() const { return graph_; }
    GraphIndex& graph_mut() { return graph_; }
    CostLedger& ledger() { return *ledger_; }
    const CostLedger& ledger() const { return *ledger_; }
    const EngineConfig& config() const { return cfg_; }
    const ProviderSet& providers() const { return providers_; }
    const PromptCatalog& prompts() const { return *prompts_; }
    Extractor& extractor() { return *extractor_; }

    MemoryEngine(MemoryEngine&&) = default;
    MemoryEngine& operator=(MemoryEngine&&) = default;

private:
    void index_fragment(const MemoryFragment& frag, RecordOutcome& out);
    ConsolidateFn consolidate_fn();
    void apply_consolidation_outcomes(const std::vector<ConsolidationOutcome>& outcomes, UnixSeconds at,
                                      int* counter);

    EngineConfig cfg_;
    // Heap-held so providers and the extractor keep valid references across
    // moves of the engine.
    std::unique_ptr<CostLedger> ledger_;
    std::unique_ptr<PromptCatalog> prompts_;
    ProviderSet providers_;
    MemoryStore store_;
    TreeIndex tree_;
    GraphIndex graph_;
    std::unique_ptr<Extractor> extractor_;
};

}  // namespace engram
