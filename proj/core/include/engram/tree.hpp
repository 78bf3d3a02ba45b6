#pragma once
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "engram/config.hpp"
#include "engram/extraction.hpp"
#include "engram/types.hpp"

namespace engram {

enum class MemoryScope { Short, Long, Mixed };

const char* memory_scope_name(MemoryScope s);
std::optional<MemoryScope> memory_scope_from_name(std::string_view name);

enum class NodeKind { leaf, summary };

struct TreeNode {
    std::string id;
    int level = 1;
    NodeKind kind = NodeKind::leaf;
    TimeInterval window;         // covering window, widened to the hull of children
    UnixSeconds window_key = 0;  // canonical window start; grouping key at this level
    std::string event_id;        // leaf payload
    std::string payload_text;    // event text (leaf) or summary text
    std::string memory_kind;     // summary metadata
    std::string stability;
    bool degraded_summary = false;
    std::vector<std::string> child_ids;
    std::string parent_id;       // empty = top of its forest
    EmbeddingVector centroid;    // leaf: event embedding; summary: renormalized mean of children
    std::int64_t source_count = 1;
    std::int64_t reinforcement_count = 0;  // times this summary was re-consolidated with >= 2 children
    UnixSeconds last_reinforced = 0;
    UnixSeconds last_child_ts = 0;         // most recent attach anchor; recency tie-break
};

struct AttachmentRecord {
    std::string node_id;
    std::string parent_id;
    int parent_level = 0;
    double similarity = 0.0;       // cosine to the chosen parent centroid at attach time
    double best_rejected = -2.0;   // best candidate similarity when a new parent was created
    bool created_new_parent = false;
    int candidate_count = 0;
};

struct ConsolidationOutcome {
    std::string parent_id;
    std::vector<std::string> cited_event_ids;  // input child ids cited by consolidated items
};

struct InsertionReport {
    std::string leaf_id;
    std::vector<std::string> created_node_ids;
    std::vector<std::string> updated_parent_ids;
    int consolidations_triggered = 0;
    std::vector<AttachmentRecord> attachments;
    std::vector<ConsolidationOutcome> consolidations;
    std::vector<int> levels_touched;
};

// Maximum active level by history age: under 7 days the day and week levels,
// under 30 days also the month level, otherwise all levels.
std::set<int> active_levels(double history_age_days, int max_level = 4);

using ConsolidateFn = std::function<ConsolidationResult(const std::vector<ConsolidationChild>&)>;

enum class SummaryPolicy { immediate, debounced };

struct ScopeCandidates {
    std::vector<std::string> fragment_ids;
    std::vector<std::string> event_ids;
    std::vector<std::string> summary_node_ids;
};

// The L-level temporal-semantic forest. Single writer; readers see whole
// nodes only between insertions.
class TreeIndex {
public:
    explicit TreeIndex(LevelSchedule schedule = LevelSchedule::defaults(),
                       bool adjacent_window_candidates = false);

    // Creates the level-1 leaf for `ev` and threads it bottom-up through the
    // active levels: attach to the best same-window parent when the centroid
    // cosine clears that level's alpha, otherwise wrap it in a new parent.
    InsertionReport insert_event(const MemoryEvent& ev, const EmbeddingVector& embedding,
                                 const std::set<int>& active, const ConsolidateFn& consolidate,
                                 SummaryPolicy policy = SummaryPolicy::immediate,
                                 int debounce_growth = 2);

    // Regenerates summaries deferred by the debounced policy.
    std::vector<ConsolidationOutcome> flush_pending(const ConsolidateFn& consolidate);

    using EventLookup = std::function<const MemoryEvent*(const std::string&)>;

    // SHORT: leaf events plus their fragments; LONG: events plus summaries;
    // MIXED: all three. The window filter keeps nodes whose window
    // intersects it.
    ScopeCandidates nodes_in_scope(MemoryScope scope, const std::optional<TimeInterval>& window_filter,
                                   const EventLookup& events) const;

    const TreeNode* node(const std::string& id) const;
    const TreeNode* leaf_for_event(const std::string& event_id) const;
    std::vector<const TreeNode*> all_nodes() const;  // insertion order
    std::size_t size() const { return nodes_.size(); }
    std::map<int, std::int64_t> level_counts() const;

    // Event ids of all leaves under a node (the node's own event for a leaf).
    std::vector<std::string> descendant_event_ids(const std::string& node_id) const;

    const LevelSchedule& schedule() const { return schedule_; }

    nlohmann::json dump() const;  // deterministic, centroids excluded
    // Rebuilds from a dump; centroids are recomputed bottom-up from the
    // event embeddings, which reproduces insertion-time values exactly.
    static TreeIndex from_dump(const nlohmann::json& j, const LevelSchedule& schedule,
                               bool adjacent_window_candidates,
                               const std::function<EmbeddingVector(const std::string&)>& event_embedding);

private:
    TreeNode& node_mut(const std::string& id);
    std::string new_node_id();
    void recompute_centroid(TreeNode& n);
    void regenerate_summary(TreeNode& parent, const ConsolidateFn& consolidate, InsertionReport* report);

    LevelSchedule schedule_;
    bool adjacent_window_candidates_ = false;
    std::deque<TreeNode> nodes_;  // reference stability across insertion
    std::unordered_map<std::string, std::size_t> by_id_;
    std::map<std::pair<int, UnixSeconds>, std::vector<std::string>> by_window_;  // (level, window_key)
    std::unordered_map<std::string, std::string> leaf_by_event_;
    std::unordered_map<std::string, int> pending_growth_;  // debounced summary regeneration
    std::int64_t next_id_ = 1;
};

}  // namespace engram
