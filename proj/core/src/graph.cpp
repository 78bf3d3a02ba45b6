#include "engram/graph.hpp"

#include <algorithm>
#include <queue>

#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

namespace {

bool tokens_prefix_or_suffix(const std::vector<std::string>& shorter, const std::vector<std::string>& longer) {
    if (shorter.empty() || shorter.size() >= longer.size()) return false;
    if (std::equal(shorter.begin(), shorter.end(), longer.begin())) return true;
    return std::equal(shorter.rbegin(), shorter.rend(), longer.rbegin());
}

// Word-boundary containment of `needle` in `haystack`, both normalized.
bool contains_name(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    const std::string padded = " " + haystack + " ";
    return padded.find(" " + needle + " ") != std::string::npos;
}

}  // namespace

GraphIndex::GraphIndex(GraphConfig cfg) : cfg_(cfg) {}

std::string GraphIndex::new_entity_id() { return "e" + std::to_string(next_entity_++); }
std::string GraphIndex::new_edge_id() { return "r" + std::to_string(next_edge_++); }

void GraphIndex::index_entity_name(const std::string& name, const std::string& id) {
    auto& ids = by_name_[name];
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
}

const EntityNode* GraphIndex::entity(const std::string& id) const {
    auto it = entity_by_id_.find(id);
    return it == entity_by_id_.end() ? nullptr : &entities_[it->second];
}

EntityNode* GraphIndex::entity_mut(const std::string& id) {
    auto it = entity_by_id_.find(id);
    return it == entity_by_id_.end() ? nullptr : &entities_[it->second];
}

std::vector<std::string> GraphIndex::ids_for_name(const std::string& normalized) const {
    auto it = by_name_.find(normalized);
    return it == by_name_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<const EntityNode*> GraphIndex::entities() const {
    std::vector<const EntityNode*> out;
    out.reserve(entities_.size());
    for (const auto& e : entities_) out.push_back(&e);
    return out;
}

std::vector<const RelationEdge*> GraphIndex::edges() const {
    std::vector<const RelationEdge*> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back(&e);
    return out;
}

std::int64_t GraphIndex::semantic_edge_count() const {
    return static_cast<std::int64_t>(
        std::count_if(edges_.begin(), edges_.end(), [](const RelationEdge& e) { return e.kind == EdgeKind::semantic; }));
}

std::int64_t GraphIndex::overlap_edge_count() const {
    return static_cast<std::int64_t>(edges_.size()) - semantic_edge_count();
}

GraphIndex::ResolveOutcome GraphIndex::resolve_entity(const ExtractedEntity& ex, const std::string& frag_id,
                                                      UnixSeconds at) {
    const std::string name = text::normalize_name(ex.surface_name);
    if (name.empty()) throw std::invalid_argument("resolve_entity: name empty after normalization");

    // Exact: canonical name or alias, type-compatible.
    if (auto it = by_name_.find(name); it != by_name_.end()) {
        for (const auto& id : it->second) {
            EntityNode* node = entity_mut(id);
            if (!entity_types_compatible(node->entity_type, ex.entity_type)) continue;
            node->fragment_links.insert(frag_id);
            node->updated_at = std::max(node->updated_at, at);
            return {id, Resolution::exact};
        }
    }

    // Fuzzy: best type-compatible candidate over token Jaccard or
    // title-stripped edit similarity.
    const auto name_toks = text::split_ws(name);
    const std::string stripped = text::join(text::strip_titles(name_toks), " ");
    std::string best_id;
    double best_score = 0.0;
    for (const auto& node : entities_) {
        if (!entity_types_compatible(node.entity_type, ex.entity_type)) continue;
        const auto cand_toks = text::split_ws(node.canonical_name);
        const double jac = text::token_jaccard(name_toks, cand_toks);
        const std::string cand_stripped = text::join(text::strip_titles(cand_toks), " ");
        const double edit = text::edit_similarity(stripped, cand_stripped);
        const bool qualifies = jac >= cfg_.jaccard_threshold || edit >= cfg_.edit_similarity_threshold;
        if (!qualifies) continue;
        const double score = std::max(jac, edit);
        if (score > best_score) {
            best_score = score;
            best_id = node.id;
        }
    }
    if (!best_id.empty()) {
        EntityNode* node = entity_mut(best_id);
        node->fragment_links.insert(frag_id);
        node->updated_at = std::max(node->updated_at, at);
        if (name != node->canonical_name && node->aliases.insert(name).second)
            index_entity_name(name, best_id);
        return {best_id, Resolution::fuzzy_merge};
    }

    // Create.
    EntityNode node;
    node.id = new_entity_id();
    node.canonical_name = name;
    node.entity_type = ex.entity_type;
    node.fragment_links.insert(frag_id);
    node.created_at = at;
    node.updated_at = at;
    const std::string id = node.id;
    entity_by_id_[id] = entities_.size();
    index_entity_name(name, id);
    entities_.push_back(std::move(node));
    return {id, Resolution::created};
}

void GraphIndex::add_adjacency(const RelationEdge& e) {
    adjacency_[e.head].push_back(e.id);
    adjacency_[e.tail].push_back(e.id);
}

std::optional<GraphIndex::RelationOutcome> GraphIndex::insert_relation(const ExtractedRelation& rel,
                                                                       const std::string& frag_id,
                                                                       UnixSeconds ts) {
    auto resolve_surface = [this](const std::string& surface) -> std::string {
        const std::string name = text::normalize_name(surface);
        const auto ids = ids_for_name(name);
        if (ids.empty()) throw UnresolvedEndpointError("unresolved relation endpoint: \"" + surface + "\"");
        // Homonyms across incompatible types: lowest id wins, deterministically.
        return *std::min_element(ids.begin(), ids.end(), [this](const std::string& a, const std::string& b) {
            return entity_by_id_.at(a) < entity_by_id_.at(b);
        });
    };
    const std::string head = resolve_surface(rel.source);
    const std::string tail = resolve_surface(rel.target);
    if (head == tail) {
        ++self_loop_drops_;
        return std::nullopt;
    }
    const std::string label = text::collapse_ws(text::to_lower_ascii(rel.label));
    const std::string key = head + "|" + label + "|" + tail;
    if (auto it = semantic_key_.find(key); it != semantic_key_.end()) {
        RelationEdge& e = edges_[edge_by_id_.at(it->second)];
        e.evidence.insert(frag_id);
        e.timestamps.push_back(ts);
        e.weight = std::max(e.weight, rel.confidence);
        return RelationOutcome{e.id, true};
    }
    RelationEdge e;
    e.id = new_edge_id();
    e.head = head;
    e.tail = tail;
    e.label = label;
    e.weight = rel.confidence;
    e.timestamps.push_back(ts);
    e.evidence.insert(frag_id);
    e.kind = EdgeKind::semantic;
    const std::string id = e.id;
    edge_by_id_[id] = edges_.size();
    semantic_key_[key] = id;
    add_adjacency(e);
    edges_.push_back(std::move(e));
    return RelationOutcome{id, false};
}

int GraphIndex::repair_overlap_edges() {
    // Existing overlap pairs, order-free.
    std::set<std::pair<std::string, std::string>> existing;
    for (const auto& e : edges_) {
        if (e.kind != EdgeKind::overlap) continue;
        existing.insert({std::min(e.head, e.tail), std::max(e.head, e.tail)});
    }
    int added = 0;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        for (std::size_t j = i + 1; j < entities_.size(); ++j) {
            const EntityNode& a = entities_[i];
            const EntityNode& b = entities_[j];
            if (!entity_types_compatible(a.entity_type, b.entity_type)) continue;
            const auto ta = text::split_ws(a.canonical_name);
            const auto tb = text::split_ws(b.canonical_name);
            const bool overlap = ta.size() < tb.size() ? tokens_prefix_or_suffix(ta, tb)
                                                       : tokens_prefix_or_suffix(tb, ta);
            if (!overlap) continue;
            const auto pair_key = std::make_pair(std::min(a.id, b.id), std::max(a.id, b.id));
            if (existing.count(pair_key)) continue;
            RelationEdge e;
            e.id = new_edge_id();
            e.head = a.id;
            e.tail = b.id;
            e.label = "overlap";
            e.weight = 0.0;
            e.kind = EdgeKind::overlap;
            edge_by_id_[e.id] = edges_.size();
            add_adjacency(e);
            edges_.push_back(std::move(e));
            existing.insert(pair_key);
            ++added;
        }
    }
    return added;
}

std::optional<EntityProfile> GraphIndex::update_profile(const std::string& entity_id,
                                                        const std::vector<const MemoryEvent*>& candidate_events,
                                                        UnixSeconds at) {
    EntityNode* node = entity_mut(entity_id);
    if (!node) throw std::out_of_range("unknown entity: " + entity_id);
    const bool important_type = node->entity_type == EntityType::person ||
                                node->entity_type == EntityType::organization ||
                                node->entity_type == EntityType::location;
    const bool salient =
        important_type || static_cast<int>(node->fragment_links.size()) >= cfg_.salience_min_links;
    if (!salient) return std::nullopt;

    auto mentions = [&](const MemoryEvent& ev) {
        const std::string norm_text = text::normalize_name(ev.event_text);
        if (contains_name(norm_text, node->canonical_name)) return true;
        for (const auto& alias : node->aliases)
            if (contains_name(norm_text, alias)) return true;
        for (const auto& p : ev.participants) {
            const std::string pn = text::normalize_name(p);
            if (pn == node->canonical_name || node->aliases.count(pn)) return true;
        }
        return false;
    };

    std::vector<const MemoryEvent*> linked;
    for (const MemoryEvent* ev : candidate_events)
        if (ev && mentions(*ev)) linked.push_back(ev);
    std::stable_sort(linked.begin(), linked.end(), [](const MemoryEvent* a, const MemoryEvent* b) {
        if (a->time_range.start != b->time_range.start) return a->time_range.start > b->time_range.start;
        return a->id > b->id;
    });

    EntityProfile profile;
    profile.entity_id = entity_id;
    std::set<std::string> seen;
    for (const MemoryEvent* ev : linked) {
        if (ev->reinforcement_count >= cfg_.persistent_fact_min_reinforcement && seen.insert(ev->event_text).second)
            profile.persistent_facts.push_back(ev->event_text);
    }
    seen.clear();
    for (const MemoryEvent* ev : linked) {
        if (static_cast<int>(profile.recent_facts.size()) >= cfg_.recent_facts_cap) break;
        if (seen.insert(ev->event_text).second) profile.recent_facts.push_back(ev->event_text);
    }
    profile.updated_at = at;
    node->profile = profile;
    node->updated_at = std::max(node->updated_at, at);
    return profile;
}

std::vector<std::string> GraphIndex::neighbors(const std::set<std::string>& seeds, int hops, int fanout) const {
    if (hops < 0) throw std::invalid_argument("neighbors: hops must be >= 0");
    // Seeds in id (insertion) order; unknown ids ignored.
    std::vector<std::string> frontier;
    std::set<std::string> result;
    for (const auto& s : seeds) {
        if (entity_by_id_.count(s)) {
            result.insert(s);
            frontier.push_back(s);
        }
    }
    std::sort(frontier.begin(), frontier.end(), [this](const std::string& a, const std::string& b) {
        return entity_by_id_.at(a) < entity_by_id_.at(b);
    });

    for (int hop = 0; hop < hops && !frontier.empty(); ++hop) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            auto adj = adjacency_.find(id);
            if (adj == adjacency_.end()) continue;
            struct Ranked {
                std::string neighbor;
                double weight;
                std::size_t evidence;
                std::size_t order;
            };
            std::vector<Ranked> ranked;
            for (const auto& eid : adj->second) {
                const RelationEdge& e = edges_[edge_by_id_.at(eid)];
                const std::string& other = e.head == id ? e.tail : e.head;
                ranked.push_back({other, e.weight, e.evidence.size(), entity_by_id_.at(other)});
            }
            std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
                if (a.weight != b.weight) return a.weight > b.weight;
                if (a.evidence != b.evidence) return a.evidence > b.evidence;
                return a.order < b.order;
            });
            int kept = 0;
            for (const auto& r : ranked) {
                if (kept >= fanout) break;
                ++kept;
                if (result.insert(r.neighbor).second) next.push_back(r.neighbor);
            }
        }
        std::sort(next.begin(), next.end(), [this](const std::string& a, const std::string& b) {
            return entity_by_id_.at(a) < entity_by_id_.at(b);
        });
        frontier = std::move(next);
    }
    std::vector<std::string> out(result.begin(), result.end());
    std::sort(out.begin(), out.end(), [this](const std::string& a, const std::string& b) {
        return entity_by_id_.at(a) < entity_by_id_.at(b);
    });
    return out;
}

json GraphIndex::dump() const {
    json ents = json::array();
    for (const auto& e : entities_) {
        json je = {
            {"id", e.id},
            {"canonical_name", e.canonical_name},
            {"entity_type", entity_type_name(e.entity_type)},
            {"aliases", e.aliases},
            {"fragment_links", e.fragment_links},
            {"embedding_id", e.embedding_id},
            {"created_at", e.created_at},
            {"updated_at", e.updated_at},
        };
        if (e.profile) {
            je["profile"] = {
                {"persistent_facts", e.profile->persistent_facts},
                {"recent_facts", e.profile->recent_facts},
                {"updated_at", e.profile->updated_at},
            };
        }
        ents.push_back(std::move(je));
    }
    json eds = json::array();
    for (const auto& e : edges_) {
        eds.push_back({
            {"id", e.id},
            {"head", e.head},
            {"tail", e.tail},
            {"label", e.label},
            {"weight", e.weight},
            {"timestamps", e.timestamps},
            {"evidence", e.evidence},
            {"kind", e.kind == EdgeKind::semantic ? "semantic" : "overlap"},
        });
    }
    return json{{"entities", ents}, {"edges", eds}};
}

GraphIndex GraphIndex::from_dump(const json& j, GraphConfig cfg) {
    GraphIndex g(cfg);
    std::int64_t max_entity = 0, max_edge = 0;
    for (const auto& je : j.at("entities")) {
        EntityNode e;
        e.id = je.at("id").get<std::string>();
        e.canonical_name = je.at("canonical_name").get<std::string>();
        e.entity_type = entity_type_from_name(je.at("entity_type").get<std::string>());
        for (const auto& a : je.at("aliases")) e.aliases.insert(a.get<std::string>());
        for (const auto& f : je.at("fragment_links")) e.fragment_links.insert(f.get<std::string>());
        e.embedding_id = je.value("embedding_id", -1);
        e.created_at = je.value("created_at", static_cast<std::int64_t>(0));
        e.updated_at = je.value("updated_at", static_cast<std::int64_t>(0));
        if (je.contains("profile")) {
            EntityProfile p;
            p.entity_id = e.id;
            for (const auto& f : je.at("profile").at("persistent_facts")) p.persistent_facts.push_back(f.get<std::string>());
            for (const auto& f : je.at("profile").at("recent_facts")) p.recent_facts.push_back(f.get<std::string>());
            p.updated_at = je.at("profile").value("updated_at", static_cast<std::int64_t>(0));
            e.profile = std::move(p);
        }
        if (e.id.size() > 1) max_entity = std::max<std::int64_t>(max_entity, std::strtoll(e.id.c_str() + 1, nullptr, 10));
        g.entity_by_id_[e.id] = g.entities_.size();
        g.index_entity_name(e.canonical_name, e.id);
        for (const auto& a : e.aliases) g.index_entity_name(a, e.id);
        g.entities_.push_back(std::move(e));
    }
    for (const auto& je : j.at("edges")) {
        RelationEdge e;
        e.id = je.at("id").get<std::string>();
        e.head = je.at("head").get<std::string>();
        e.tail = je.at("tail").get<std::string>();
        e.label = je.at("label").get<std::string>();
        e.weight = je.at("weight").get<double>();
        for (const auto& t : je.at("timestamps")) e.timestamps.push_back(t.get<std::int64_t>());
        for (const auto& f : je.at("evidence")) e.evidence.insert(f.get<std::string>());
        e.kind = je.at("kind").get<std::string>() == "overlap" ? EdgeKind::overlap : EdgeKind::semantic;
        if (e.id.size() > 1) max_edge = std::max<std::int64_t>(max_edge, std::strtoll(e.id.c_str() + 1, nullptr, 10));
        g.edge_by_id_[e.id] = g.edges_.size();
        if (e.kind == EdgeKind::semantic) g.semantic_key_[e.head + "|" + e.label + "|" + e.tail] = e.id;
        g.add_adjacency(e);
        g.edges_.push_back(std::move(e));
    }
    g.next_entity_ = max_entity + 1;
    g.next_edge_ = max_edge + 1;
    return g;
}

}  // namespace engram
