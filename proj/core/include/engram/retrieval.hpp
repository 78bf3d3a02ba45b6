#pragma once
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "engram/config.hpp"
#include "engram/graph.hpp"
#include "engram/prompts.hpp"
#include "engram/providers.hpp"
#include "engram/scoring.hpp"
#include "engram/store.hpp"
#include "engram/tree.hpp"

namespace engram {

enum class CoverageMode { local, global };

const char* coverage_mode_name(CoverageMode m);

struct SubQuery {
    std::string id;  // "q1".."qK"
    std::string text;
    MemoryScope scope = MemoryScope::Short;
    CoverageMode coverage = CoverageMode::local;
    std::optional<std::string> type_hint;
    std::vector<std::string> deps;
    std::optional<TimeInterval> hint_time;
};

struct QueryPlan {
    std::vector<SubQuery> subqueries;
    std::map<std::string, std::vector<std::string>> dependency_graph;
    bool degraded = false;

    nlohmann::json to_json() const;
};

enum class SourceKind { fragment, event, summary };

const char* source_kind_name(SourceKind k);

struct EvidenceItem {
    SourceKind kind = SourceKind::event;
    std::string source_id;
    std::string text;
    TimeInterval interval;
    double semantic = 0.0;
    std::optional<double> temporal;  // absent without a hint; contributes zero
    double robustness = 0.0;
    double gather_score = 0.0;
    double final_score = 0.0;
    std::vector<std::string> provenance;  // fragment ids

    nlohmann::json to_json() const;
};

struct SubAnswer {
    std::string subquery_id;
    std::string answer_text;
    bool missing_info = false;
    bool degraded = false;
    std::vector<std::string> evidence_used;
    std::optional<std::string> follow_up;  // present only while missing_info holds
    int follow_up_rounds = 0;

    nlohmann::json to_json() const;
};

struct QueryResult {
    std::string final_answer;
    QueryPlan plan;
    std::vector<SubAnswer> sub_answers;
    std::vector<EvidenceItem> evidence;
    int follow_up_rounds = 0;
    std::int64_t gathered_candidates = 0;  // pre-cut pool size, summed over rounds
    bool degraded = false;
    nlohmann::json costs;  // per-stage ledger deltas for this query

    nlohmann::json to_json() const;
};

// The three-stage online pipeline: planning, evidence retrieval with graph
// expansion and scope-filtered tree search, and generation with one optional
// missing-information follow-up round per sub-query. Construct per query;
// holds read-only references plus a query-local embedding cache.
class Retriever {
public:
    Retriever(const MemoryStore& store, const TreeIndex& tree, const GraphIndex& graph,
              const ProviderSet& providers, const PromptCatalog& prompts, const EngineConfig& cfg,
              CostLedger& ledger);

    QueryPlan plan_query(const std::string& query, UnixSeconds query_time);

    std::set<std::string> locate_seed_entities(const SubQuery& sq);
    // Seeds matched against `query_text` (differs from sq.text in the
    // follow-up round).
    std::set<std::string> locate_seed_entities(const SubQuery& sq, const std::string& query_text);

    std::vector<EvidenceItem> gather_and_rank(const SubQuery& sq, const std::string& query_text,
                                              const std::set<std::string>& seeds, UnixSeconds query_time,
                                              int k);

    SubAnswer answer_subquery(const SubQuery& sq, const std::vector<EvidenceItem>& chain,
                              const std::map<std::string, SubAnswer>& dep_answers);

    // Validated anchored non-paraphrase follow-up, or nullopt after one
    // re-ask fails validation.
    std::optional<std::string> missing_info_query(const std::string& original_query, const SubQuery& sq,
                                                  const SubAnswer& first_pass,
                                                  const std::vector<EvidenceItem>& chain);

    std::string synthesize(const std::string& query, const std::vector<SubAnswer>& ordered, bool& degraded);

    QueryResult run(const std::string& query, UnixSeconds query_time, std::optional<int> k_override = {},
                    std::optional<MemoryScope> scope_override = {});

    std::int64_t gathered_candidates() const { return gathered_candidates_; }

private:
    EmbeddingVector embed_cached(const std::string& text);
    std::optional<QueryPlan> try_parse_plan(const std::string& text, const std::string& original,
                                            UnixSeconds query_time) const;
    std::vector<EvidenceItem> merge_chains(std::vector<EvidenceItem> first, std::vector<EvidenceItem> second,
                                           int k) const;

    const MemoryStore& store_;
    const TreeIndex& tree_;
    const GraphIndex& graph_;
    const ProviderSet& providers_;
    const PromptCatalog& prompts_;
    const EngineConfig& cfg_;
    CostLedger& ledger_;
    std::unordered_map<std::string, EmbeddingVector> embed_cache_;
    std::int64_t gathered_candidates_ = 0;
};

// Execution order honoring dependencies (Kahn, ties by id order). Throws on
// cycles; plans are validated before this runs.
std::vector<std::size_t> topological_order(const QueryPlan& plan);

}  // namespace engram
