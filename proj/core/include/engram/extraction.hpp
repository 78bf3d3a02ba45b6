#pragma once
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "engram/prompts.hpp"
#include "engram/providers.hpp"
#include "engram/types.hpp"

namespace engram {

enum class EntityType : std::uint8_t {
    person,
    organization,
    location,
    event,
    product,
    work,
    date,
    time,
    other,
};

const char* entity_type_name(EntityType t);
EntityType entity_type_from_name(std::string_view name);  // unknown names map to `other`

// Identical types are compatible, and `other` is compatible with anything.
bool entity_types_compatible(EntityType a, EntityType b);

struct ExtractedEntity {
    std::string surface_name;
    EntityType entity_type = EntityType::other;
    std::optional<std::string> span;
    std::optional<std::string> role;
    double salience = 0.5;
    std::map<std::string, std::string> meta;
};

struct ExtractedRelation {
    std::string source;
    std::string target;
    std::string label;
    double confidence = 0.5;
    std::optional<std::string> span;
};

struct ConsolidationChild {
    std::string id;
    std::string text;
    TimeInterval range;
};

struct ConsolidationItem {
    std::string consolidated_text;
    std::string memory_kind = "other";
    TimeInterval time_range;
    std::vector<std::string> participants;
    std::vector<std::string> entity_hints;
    std::vector<std::string> source_event_ids;
    std::string stability = "stable";  // stable|evolving|conflicting
    std::vector<std::string> invariants;
    std::vector<std::string> evolution;
    nlohmann::json conflicts = nlohmann::json::array();
    double confidence = 0.0;
};

struct ConsolidationResult {
    std::vector<ConsolidationItem> items;
    std::vector<std::string> unmerged_ids;
    bool degraded = false;
};

// Turns fragments into events, entities and relations, and consolidates
// child payloads for tree parents. Every model failure degrades to the
// deterministic rule-based path instead of aborting; degraded outputs are
// flagged so runs can be excluded.
class Extractor {
public:
    Extractor(ChatProvider& chat, const PromptCatalog& prompts, CostLedger& ledger, int neighbor_window = 5);

    struct EventsResult {
        std::vector<MemoryEvent> events;  // ids/embedding ids unset; assigned by the store
        bool degraded = false;
    };
    EventsResult extract_events(const MemoryFragment& frag,
                                std::span<const MemoryFragment* const> prior_neighbors);

    struct EntitiesResult {
        std::vector<ExtractedEntity> entities;
        std::vector<ExtractedRelation> relations;
        bool degraded = false;
        int dropped_self_relations = 0;
        int dropped_unknown_endpoints = 0;
    };
    EntitiesResult extract_entities_relations(const MemoryFragment& frag);

    // With a single child no model call is made: the result has no items and
    // the child comes back unmerged (the caller reuses its text verbatim).
    ConsolidationResult consolidate_payloads(const std::vector<ConsolidationChild>& children);

    int neighbor_window() const { return neighbor_window_; }

private:
    nlohmann::json chat_json(const std::string& tmpl, const nlohmann::json& input, CostStage stage);

    ChatProvider& chat_;
    const PromptCatalog& prompts_;
    CostLedger& ledger_;
    int neighbor_window_;
};

}  // namespace engram
