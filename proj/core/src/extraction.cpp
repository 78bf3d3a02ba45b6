#include "engram/extraction.hpp"

#include <algorithm>
#include <set>

#include "engram/rules.hpp"
#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

const char* entity_type_name(EntityType t) {
    switch (t) {
        case EntityType::person: return "person";
        case EntityType::organization: return "organization";
        case EntityType::location: return "location";
        case EntityType::event: return "event";
        case EntityType::product: return "product";
        case EntityType::work: return "work";
        case EntityType::date: return "date";
        case EntityType::time: return "time";
        case EntityType::other: return "other";
    }
    return "other";
}

EntityType entity_type_from_name(std::string_view name) {
    if (name == "person") return EntityType::person;
    if (name == "organization") return EntityType::organization;
    if (name == "location") return EntityType::location;
    if (name == "event") return EntityType::event;
    if (name == "product") return EntityType::product;
    if (name == "work") return EntityType::work;
    if (name == "date") return EntityType::date;
    if (name == "time") return EntityType::time;
    return EntityType::other;
}

bool entity_types_compatible(EntityType a, EntityType b) {
    return a == b || a == EntityType::other || b == EntityType::other;
}

Extractor::Extractor(ChatProvider& chat, const PromptCatalog& prompts, CostLedger& ledger,
                     int neighbor_window)
    : chat_(chat), prompts_(prompts), ledger_(ledger), neighbor_window_(neighbor_window) {}

json Extractor::chat_json(const std::string& tmpl, const json& input, CostStage stage) {
    ChatRequest req;
    req.system_prompt = tmpl;
    req.user_payload = "Input JSON:\n" + input.dump();
    req.json_mode = true;
    const ChatResponse resp = chat_.chat(req, stage);
    return json::parse(resp.text);
}

namespace {

json fragment_to_json(const MemoryFragment& f) {
    return json{
        {"id", f.id}, {"conversation_id", f.conversation_id}, {"speaker", f.speaker},
        {"timestamp", f.timestamp}, {"text", f.text},
    };
}

// Validates one raw event object into a MemoryEvent; returns false when the
// object has no usable claim text.
bool parse_event(const json& e, const MemoryFragment& frag, MemoryEvent& out) {
    if (!e.is_object()) return false;
    out.event_text = text::trim(e.value("event_text", ""));
    if (out.event_text.empty()) return false;
    out.frag_ids.clear();
    if (e.contains("frag_ids") && e.at("frag_ids").is_array())
        for (const auto& fi : e.at("frag_ids"))
            if (fi.is_string()) out.frag_ids.push_back(fi.get<std::string>());
    if (std::find(out.frag_ids.begin(), out.frag_ids.end(), frag.id) == out.frag_ids.end())
        out.frag_ids.push_back(frag.id);
    out.time_range = TimeInterval::point(frag.timestamp);
    if (e.contains("time_range") && e.at("time_range").is_array() && e.at("time_range").size() == 2 &&
        e.at("time_range")[0].is_number() && e.at("time_range")[1].is_number()) {
        TimeInterval r{e.at("time_range")[0].get<std::int64_t>(), e.at("time_range")[1].get<std::int64_t>()};
        if (r.valid() && r.start > 0) out.time_range = r;
    }
    out.event_type = event_type_from_name(e.value("event_type", "other"));
    out.participants.clear();
    if (e.contains("participants") && e.at("participants").is_array())
        for (const auto& p : e.at("participants"))
            if (p.is_string()) out.participants.push_back(p.get<std::string>());
    out.reinforcement_count = 0;
    out.last_reinforced = std::max(out.time_range.start, frag.timestamp);
    return true;
}

}  // namespace

Extractor::EventsResult Extractor::extract_events(const MemoryFragment& frag,
                                                  std::span<const MemoryFragment* const> prior_neighbors) {
    json input;
    input["fragment"] = fragment_to_json(frag);
    json neighbors = json::array();
    const std::size_t take = std::min<std::size_t>(prior_neighbors.size(),
                                                   static_cast<std::size_t>(neighbor_window_));
    for (std::size_t i = prior_neighbors.size() - take; i < prior_neighbors.size(); ++i)
        neighbors.push_back(fragment_to_json(*prior_neighbors[i]));
    input["neighbors"] = neighbors;

    EventsResult result;
    json reply;
    try {
        reply = chat_json(prompts_.extraction, input, CostStage::index);
    } catch (const ProviderError&) {
        reply = rules::extract_events(input);
        result.degraded = true;
    }

    if (!reply.is_object() || !reply.contains("events") || !reply.at("events").is_array()) {
        reply = rules::extract_events(input);
        result.degraded = true;
    }
    for (const auto& e : reply.at("events")) {
        MemoryEvent ev;
        if (parse_event(e, frag, ev)) result.events.push_back(std::move(ev));
    }
    return result;
}

Extractor::EntitiesResult Extractor::extract_entities_relations(const MemoryFragment& frag) {
    json input;
    input["fragment"] = fragment_to_json(frag);

    EntitiesResult result;
    json reply;
    try {
        reply = chat_json(prompts_.entity_extraction, input, CostStage::index);
    } catch (const ProviderError&) {
        reply = rules::extract_entities(input);
        result.degraded = true;
    }
    if (!reply.is_object() || !reply.contains("entities")) {
        reply = rules::extract_entities(input);
        result.degraded = true;
    }

    std::set<std::string> surface_names;
    if (reply.contains("entities") && reply.at("entities").is_array()) {
        for (const auto& e : reply.at("entities")) {
            if (!e.is_object()) continue;
            ExtractedEntity ex;
            ex.surface_name = text::trim(e.value("name", ""));
            if (ex.surface_name.empty() || text::normalize_name(ex.surface_name).empty()) continue;
            ex.entity_type = entity_type_from_name(e.value("type", "other"));
            if (e.contains("span") && e.at("span").is_string()) ex.span = e.at("span").get<std::string>();
            if (e.contains("role") && e.at("role").is_string()) ex.role = e.at("role").get<std::string>();
            ex.salience = e.value("salience", 0.5);
            surface_names.insert(text::normalize_name(ex.surface_name));
            result.entities.push_back(std::move(ex));
        }
    }
    if (reply.contains("relations") && reply.at("relations").is_array()) {
        for (const auto& r : reply.at("relations")) {
            if (!r.is_object()) continue;
            ExtractedRelation rel;
            rel.source = text::trim(r.value("source", ""));
            rel.target = text::trim(r.value("target", ""));
            rel.label = text::trim(r.value("label", ""));
            rel.confidence = r.value("confidence", 0.5);
            if (r.contains("span") && r.at("span").is_string()) rel.span = r.at("span").get<std::string>();
            if (rel.source.empty() || rel.target.empty() || rel.label.empty()) continue;
            const std::string ns = text::normalize_name(rel.source);
            const std::string nt = text::normalize_name(rel.target);
            if (ns == nt) {
                ++result.dropped_self_relations;
                continue;
            }
            if (!surface_names.count(ns) || !surface_names.count(nt)) {
                ++result.dropped_unknown_endpoints;
                continue;
            }
            result.relations.push_back(std::move(rel));
        }
    }
    return result;
}

ConsolidationResult Extractor::consolidate_payloads(const std::vector<ConsolidationChild>& children) {
    if (children.empty()) throw std::invalid_argument("consolidate_payloads: no children");
    ConsolidationResult result;
    if (children.size() == 1) {
        // The prompt's hard constraint (>= 2 sources) makes a single-child
        // merge impossible; the caller reuses the child text verbatim.
        result.unmerged_ids.push_back(children[0].id);
        return result;
    }

    json input;
    json arr = json::array();
    for (const auto& c : children)
        arr.push_back({{"id", c.id}, {"text", c.text}, {"time_range", {c.range.start, c.range.end}}});
    input["children"] = arr;

    std::set<std::string> input_ids;
    for (const auto& c : children) input_ids.insert(c.id);

    json reply;
    try {
        reply = chat_json(prompts_.consolidation, input, CostStage::index);
        if (!reply.is_object() || !reply.contains("consolidated_events")) throw ProviderError("bad shape");
    } catch (const ProviderError&) {
        // Deterministic fallback: all children merge into one item in
        // timestamp order.
        std::vector<ConsolidationChild> sorted(children);
        std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            if (a.range.start != b.range.start) return a.range.start < b.range.start;
            return a.id < b.id;
        });
        ConsolidationItem item;
        std::vector<std::string> texts;
        TimeInterval span = sorted.front().range;
        for (const auto& c : sorted) {
            texts.push_back(c.text);
            item.source_event_ids.push_back(c.id);
            span = TimeInterval::hull(span, c.range);
        }
        item.consolidated_text = text::join(texts, " ");
        item.stability = "stable";
        item.time_range = span;
        result.items.push_back(std::move(item));
        result.degraded = true;
        return result;
    }

    std::set<std::string> cited;
    for (const auto& e : reply.at("consolidated_events")) {
        if (!e.is_object()) continue;
        ConsolidationItem item;
        item.consolidated_text = text::trim(e.value("consolidated_text", ""));
        if (item.consolidated_text.empty()) continue;
        if (e.contains("source_event_ids") && e.at("source_event_ids").is_array())
            for (const auto& sid : e.at("source_event_ids"))
                if (sid.is_string() && input_ids.count(sid.get<std::string>()))
                    item.source_event_ids.push_back(sid.get<std::string>());
        if (item.source_event_ids.size() < 2) continue;  // prompt hard constraint
        item.memory_kind = e.value("memory_kind", "other");
        item.stability = e.value("stability", "stable");
        if (e.contains("time_range") && e.at("time_range").is_array() && e.at("time_range").size() == 2 &&
            e.at("time_range")[0].is_number() && e.at("time_range")[1].is_number()) {
            item.time_range = {e.at("time_range")[0].get<std::int64_t>(),
                               e.at("time_range")[1].get<std::int64_t>()};
        }
        if (e.contains("participants") && e.at("participants").is_array())
            for (const auto& p : e.at("participants"))
                if (p.is_string()) item.participants.push_back(p.get<std::string>());
        if (e.contains("entity_hints") && e.at("entity_hints").is_array())
            for (const auto& h : e.at("entity_hints"))
                if (h.is_string()) item.entity_hints.push_back(h.get<std::string>());
        if (e.contains("invariants") && e.at("invariants").is_array())
            for (const auto& v : e.at("invariants"))
                if (v.is_string()) item.invariants.push_back(v.get<std::string>());
        if (e.contains("evolution") && e.at("evolution").is_array())
            for (const auto& v : e.at("evolution"))
                if (v.is_string()) item.evolution.push_back(v.get<std::string>());
        if (e.contains("conflicts") && e.at("conflicts").is_array()) item.conflicts = e.at("conflicts");
        item.confidence = e.value("confidence", 0.0);
        for (const auto& sid : item.source_event_ids) cited.insert(sid);
        result.items.push_back(std::move(item));
    }
    if (reply.contains("unmerged_event_ids") && reply.at("unmerged_event_ids").is_array())
        for (const auto& u : reply.at("unmerged_event_ids"))
            if (u.is_string() && input_ids.count(u.get<std::string>()))
                result.unmerged_ids.push_back(u.get<std::string>());
    // Every input id must land somewhere.
    for (const auto& c : children)
        if (!cited.count(c.id) &&
            std::find(result.unmerged_ids.begin(), result.unmerged_ids.end(), c.id) ==
                result.unmerged_ids.end())
            result.unmerged_ids.push_back(c.id);
    return result;
}

}  // namespace engram
