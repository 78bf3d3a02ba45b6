#pragma once
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

enum class EdgeKind { semantic, overlap };
enum class Resolution { exact, fuzzy_merge, created };

struct EntityProfile {
    std::string entity_id;
    std::vector<std::string> persistent_facts;
    std::vector<std::string> recent_facts;  // most recent first, bounded
    UnixSeconds updated_at = 0;
};

struct EntityNode {
    std::string id;
    std::string canonical_name;  // normalized
    EntityType entity_type = EntityType::other;
    std::set<std::string> aliases;  // normalized surface variants, never the canonical name
    std::set<std::string> fragment_links;
    std::optional<EntityProfile> profile;
    std::int32_t embedding_id = -1;  // name embedding for seed matching
    UnixSeconds created_at = 0;
    UnixSeconds updated_at = 0;
};

struct RelationEdge {
    std::string id;
    std::string head;  // entity id
    std::string tail;  // entity id
    std::string label;
    double weight = 0.0;  // max confidence seen
    std::vector<UnixSeconds> timestamps;
    std::set<std::string> evidence;  // fragment ids
    EdgeKind kind = EdgeKind::semantic;
};

class UnresolvedEndpointError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The entity-centered knowledge graph: resolution and merging of extracted
// entities, deduplicated relation edges with evidence, provenance links,
// profiles for salient entities, and overlap repair edges. Single writer.
class GraphIndex {
public:
    explicit GraphIndex(GraphConfig cfg = {});

    struct ResolveOutcome {
        std::string entity_id;
        Resolution resolution = Resolution::created;
    };
    // Exact (name or alias, compatible type) merges; otherwise the best
    // fuzzy candidate with token-Jaccard >= 0.8 or title-stripped edit
    // similarity >= 0.9 merges with the surface recorded as an alias;
    // otherwise a new node is created. Always links the fragment.
    ResolveOutcome resolve_entity(const ExtractedEntity& ex, const std::string& frag_id, UnixSeconds at);

    struct RelationOutcome {
        std::string edge_id;
        bool merged = false;
    };
    // Maps surface names to resolved nodes. Duplicate (head, label, tail)
    // extends evidence instead of creating a new edge. Self-loops are
    // dropped (nullopt) and counted. Throws UnresolvedEndpointError naming
    // the surface form when an endpoint cannot be mapped.
    std::optional<RelationOutcome> insert_relation(const ExtractedRelation& rel, const std::string& frag_id,
                                                   UnixSeconds ts);

    // Adds overlap edges between type-compatible nodes where one name's
    // token sequence is a proper prefix or suffix of the other's. Never
    // merges nodes or edits aliases; idempotent. Returns edges added.
    int repair_overlap_edges();

    // Creates/updates the profile iff the entity is salient (fragment link
    // count or important type); returns nullopt otherwise.
    std::optional<EntityProfile> update_profile(const std::string& entity_id,
                                                const std::vector<const MemoryEvent*>& candidate_events,
                                                UnixSeconds at);

    // Breadth-first closure over semantic and overlap edges up to `hops`,
    // keeping at most `fanout` neighbors per node ranked by (weight desc,
    // evidence size desc, id asc). Includes the seeds. Sorted output.
    std::vector<std::string> neighbors(const std::set<std::string>& seeds, int hops, int fanout) const;

    const EntityNode* entity(const std::string& id) const;
    EntityNode* entity_mut(const std::string& id);
    // All ids whose canonical name or alias equals the normalized name.
    std::vector<std::string> ids_for_name(const std::string& normalized) const;
    std::vector<const EntityNode*> entities() const;  // insertion order
    std::vector<const RelationEdge*> edges() const;
    std::int64_t semantic_edge_count() const;
    std::int64_t overlap_edge_count() const;
    int self_loop_drops() const { return self_loop_drops_; }

    const GraphConfig& config() const { return cfg_; }

    nlohmann::json dump() const;
    static GraphIndex from_dump(const nlohmann::json& j, GraphConfig cfg);

private:
    std::string new_entity_id();
    std::string new_edge_id();
    void index_entity_name(const std::string& name, const std::string& id);
    void add_adjacency(const RelationEdge& e);

    GraphConfig cfg_;
    std::vector<EntityNode> entities_;
    std::vector<RelationEdge> edges_;
    std::unordered_map<std::string, std::size_t> entity_by_id_;
    std::unordered_map<std::string, std::size_t> edge_by_id_;
    std::unordered_map<std::string, std::vector<std::string>> by_name_;  // normalized name/alias -> ids
    std::unordered_map<std::string, std::string> semantic_key_;          // head|label|tail -> edge id
    std::unordered_map<std::string, std::vector<std::string>> adjacency_;  // entity id -> edge ids
    int self_loop_drops_ = 0;
    std::int64_t next_entity_ = 1;
    std::int64_t next_edge_ = 1;
};

}  // namespace engram
