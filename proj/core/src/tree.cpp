#include "engram/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

const char* memory_scope_name(MemoryScope s) {
    switch (s) {
        case MemoryScope::Short: return "SHORT";
        case MemoryScope::Long: return "LONG";
        case MemoryScope::Mixed: return "MIXED";
    }
    return "MIXED";
}

std::optional<MemoryScope> memory_scope_from_name(std::string_view name) {
    if (name == "SHORT") return MemoryScope::Short;
    if (name == "LONG") return MemoryScope::Long;
    if (name == "MIXED") return MemoryScope::Mixed;
    return std::nullopt;
}

std::set<int> active_levels(double history_age_days, int max_level) {
    if (history_age_days < 0.0) throw std::invalid_argument("history age must be >= 0");
    std::set<int> levels;
    int top = 2;
    if (history_age_days >= 7.0) top = 3;
    if (history_age_days >= 30.0) top = 4;
    top = std::min(top, max_level);
    for (int l = 1; l <= top; ++l) levels.insert(l);
    return levels;
}

TreeIndex::TreeIndex(LevelSchedule schedule, bool adjacent_window_candidates)
    : schedule_(std::move(schedule)), adjacent_window_candidates_(adjacent_window_candidates) {
    schedule_.validate();
}

std::string TreeIndex::new_node_id() { return "n" + std::to_string(next_id_++); }

TreeNode& TreeIndex::node_mut(const std::string& id) {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw std::out_of_range("unknown tree node: " + id);
    return nodes_[it->second];
}

const TreeNode* TreeIndex::node(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &nodes_[it->second];
}

const TreeNode* TreeIndex::leaf_for_event(const std::string& event_id) const {
    auto it = leaf_by_event_.find(event_id);
    return it == leaf_by_event_.end() ? nullptr : node(it->second);
}

std::vector<const TreeNode*> TreeIndex::all_nodes() const {
    std::vector<const TreeNode*> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(&n);
    return out;
}

std::map<int, std::int64_t> TreeIndex::level_counts() const {
    std::map<int, std::int64_t> counts;
    for (const auto& n : nodes_) ++counts[n.level];
    return counts;
}

void TreeIndex::recompute_centroid(TreeNode& n) {
    if (n.kind == NodeKind::leaf || n.child_ids.empty()) return;
    const int dim = node(n.child_ids.front())->centroid.dim();
    std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
    for (const auto& cid : n.child_ids) {
        const TreeNode* c = node(cid);
        for (int i = 0; i < dim; ++i) acc[static_cast<std::size_t>(i)] += c->centroid.values[static_cast<std::size_t>(i)];
    }
    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    if (norm_sq <= 0.0) {
        // Degenerate cancellation; fall back to the first child.
        n.centroid = node(n.child_ids.front())->centroid;
        return;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<float> values(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) values[static_cast<std::size_t>(i)] = static_cast<float>(acc[static_cast<std::size_t>(i)] * inv);
    n.centroid = EmbeddingVector{std::move(values)};
}

void TreeIndex::regenerate_summary(TreeNode& parent, const ConsolidateFn& consolidate,
                                   InsertionReport* report) {
    if (parent.child_ids.empty()) return;
    std::vector<ConsolidationChild> children;
    children.reserve(parent.child_ids.size());
    for (const auto& cid : parent.child_ids) {
        const TreeNode* c = node(cid);
        ConsolidationChild cc;
        cc.id = c->kind == NodeKind::leaf ? c->event_id : c->id;
        cc.text = c->payload_text;
        cc.range = c->window;
        children.push_back(std::move(cc));
    }
    std::stable_sort(children.begin(), children.end(), [](const auto& a, const auto& b) {
        if (a.range.start != b.range.start) return a.range.start < b.range.start;
        return a.id < b.id;
    });

    if (children.size() == 1) {
        parent.payload_text = children[0].text;  // single-child verbatim rule
        parent.memory_kind.clear();
        parent.stability.clear();
        parent.degraded_summary = false;
        return;
    }

    const ConsolidationResult result = consolidate(children);
    std::vector<std::string> parts;
    std::vector<std::string> cited;
    std::string stability;
    std::string kind;
    for (const auto& item : result.items) {
        parts.push_back(item.consolidated_text);
        for (const auto& sid : item.source_event_ids) cited.push_back(sid);
        if (kind.empty()) kind = item.memory_kind;
        if (item.stability == "conflicting") stability = "conflicting";
        else if (stability.empty()) stability = item.stability;
    }
    // Unmerged children keep their own text in the payload so the parent
    // still covers everything beneath it.
    for (const auto& uid : result.unmerged_ids) {
        for (const auto& c : children)
            if (c.id == uid) parts.push_back(c.text);
    }
    parent.payload_text = text::join(parts, "\n");
    parent.memory_kind = kind;
    parent.stability = stability.empty() ? "stable" : stability;
    parent.degraded_summary = result.degraded;

    ++parent.reinforcement_count;
    parent.last_reinforced = std::max(parent.last_reinforced, parent.last_child_ts);
    if (report) {
        ++report->consolidations_triggered;
        report->consolidations.push_back({parent.id, cited});
    }
}

InsertionReport TreeIndex::insert_event(const MemoryEvent& ev, const EmbeddingVector& embedding,
                                        const std::set<int>& active, const ConsolidateFn& consolidate,
                                        SummaryPolicy policy, int debounce_growth) {
    if (ev.id.empty()) throw std::invalid_argument("insert_event: event has no id");
    if (embedding.empty()) throw std::invalid_argument("insert_event: event has no embedding");
    if (leaf_by_event_.count(ev.id)) throw std::invalid_argument("insert_event: duplicate leaf for " + ev.id);

    const UnixSeconds anchor = ev.time_range.start;
    InsertionReport report;

    TreeNode leaf;
    leaf.id = new_node_id();
    leaf.level = 1;
    leaf.kind = NodeKind::leaf;
    leaf.window = window_of(anchor, schedule_.at(1).unit);
    leaf.window_key = leaf.window.start;
    leaf.event_id = ev.id;
    leaf.payload_text = ev.event_text;
    leaf.centroid = embedding;
    leaf.source_count = 1;
    leaf.last_child_ts = anchor;
    leaf.last_reinforced = anchor;

    by_id_[leaf.id] = nodes_.size();
    by_window_[{1, leaf.window_key}].push_back(leaf.id);
    leaf_by_event_[ev.id] = leaf.id;
    report.leaf_id = leaf.id;
    report.created_node_ids.push_back(leaf.id);
    report.levels_touched.push_back(1);
    nodes_.push_back(std::move(leaf));

    auto maybe_regenerate = [&](TreeNode& parent) {
        if (policy == SummaryPolicy::immediate) {
            regenerate_summary(parent, consolidate, &report);
        } else {
            int& growth = pending_growth_[parent.id];
            if (++growth >= debounce_growth) {
                regenerate_summary(parent, consolidate, &report);
                pending_growth_.erase(parent.id);
            }
        }
    };

    std::string current_id = report.leaf_id;
    for (int lvl = 2; lvl <= schedule_.max_level(); ++lvl) {
        if (!active.count(lvl)) break;
        const LevelConfig& lc = schedule_.at(lvl);

        {
            TreeNode& cur = node_mut(current_id);
            if (!cur.parent_id.empty()) {
                // Placement above is already established; propagate the update.
                const std::string parent_id = cur.parent_id;
                TreeNode& parent = node_mut(parent_id);
                parent.window = TimeInterval::hull(parent.window, cur.window);
                parent.last_child_ts = std::max(parent.last_child_ts, anchor);
                std::int64_t sources = 0;
                for (const auto& cid : parent.child_ids) sources += node(cid)->source_count;
                parent.source_count = sources;
                recompute_centroid(parent);
                maybe_regenerate(parent);
                report.updated_parent_ids.push_back(parent_id);
                report.levels_touched.push_back(lvl);
                current_id = parent_id;
                continue;
            }
        }

        // Place `current` under a level-`lvl` parent within its window.
        const TreeNode& cur = node_mut(current_id);
        const UnixSeconds key = window_of(cur.window_key, lc.unit).start;
        std::vector<std::string> candidates;
        auto collect = [&](UnixSeconds k) {
            auto it = by_window_.find({lvl, k});
            if (it != by_window_.end())
                candidates.insert(candidates.end(), it->second.begin(), it->second.end());
        };
        collect(key);
        if (adjacent_window_candidates_) {
            collect(window_of(key - 1, lc.unit).start);
            collect(window_of(window_of(key, lc.unit).end + 1, lc.unit).start);
        }

        std::string best_id;
        double best_sim = -2.0;
        for (const auto& cand_id : candidates) {
            const TreeNode* cand = node(cand_id);
            const double sim = cosine(cur.centroid, cand->centroid);
            bool better = sim > best_sim;
            if (!better && sim == best_sim && !best_id.empty()) {
                const TreeNode* prev = node(best_id);
                if (cand->last_child_ts != prev->last_child_ts)
                    better = cand->last_child_ts > prev->last_child_ts;  // recency bias
                else
                    better = by_id_.at(cand_id) < by_id_.at(best_id);  // then lowest id
            }
            if (better) {
                best_id = cand_id;
                best_sim = sim;
            }
        }

        if (!best_id.empty() && best_sim >= lc.alpha) {
            TreeNode& parent = node_mut(best_id);
            parent.child_ids.push_back(current_id);
            parent.window = TimeInterval::hull(parent.window, node(current_id)->window);
            parent.last_child_ts = std::max(parent.last_child_ts, anchor);
            std::int64_t sources = 0;
            for (const auto& cid : parent.child_ids) sources += node(cid)->source_count;
            parent.source_count = sources;
            recompute_centroid(parent);
            node_mut(current_id).parent_id = best_id;

            AttachmentRecord rec;
            rec.node_id = current_id;
            rec.parent_id = best_id;
            rec.parent_level = lvl;
            rec.similarity = best_sim;
            rec.created_new_parent = false;
            rec.candidate_count = static_cast<int>(candidates.size());
            report.attachments.push_back(rec);

            maybe_regenerate(parent);
            report.updated_parent_ids.push_back(best_id);
            report.levels_touched.push_back(lvl);
            current_id = best_id;
            continue;
        }

        // No candidate clears alpha: wrap in a new single-child parent.
        TreeNode parent;
        parent.id = new_node_id();
        parent.level = lvl;
        parent.kind = NodeKind::summary;
        parent.window = TimeInterval::hull(window_of(cur.window_key, lc.unit), cur.window);
        parent.window_key = key;
        parent.payload_text = cur.payload_text;  // single-child verbatim rule
        parent.child_ids = {current_id};
        parent.centroid = cur.centroid;
        parent.source_count = cur.source_count;
        parent.last_child_ts = anchor;
        parent.last_reinforced = anchor;

        AttachmentRecord rec;
        rec.node_id = current_id;
        rec.parent_id = parent.id;
        rec.parent_level = lvl;
        rec.similarity = 1.0;
        rec.best_rejected = best_sim;
        rec.created_new_parent = true;
        rec.candidate_count = static_cast<int>(candidates.size());
        report.attachments.push_back(rec);

        const std::string parent_id = parent.id;
        by_id_[parent_id] = nodes_.size();
        by_window_[{lvl, key}].push_back(parent_id);
        nodes_.push_back(std::move(parent));
        node_mut(current_id).parent_id = parent_id;
        report.created_node_ids.push_back(parent_id);
        report.levels_touched.push_back(lvl);
        current_id = parent_id;
    }
    return report;
}

std::vector<ConsolidationOutcome> TreeIndex::flush_pending(const ConsolidateFn& consolidate) {
    std::vector<std::string> ids;
    ids.reserve(pending_growth_.size());
    for (const auto& [id, _] : pending_growth_) ids.push_back(id);
    std::sort(ids.begin(), ids.end(),
              [this](const std::string& a, const std::string& b) { return by_id_.at(a) < by_id_.at(b); });
    std::vector<ConsolidationOutcome> outcomes;
    for (const auto& id : ids) {
        InsertionReport scratch;
        regenerate_summary(node_mut(id), consolidate, &scratch);
        for (auto& o : scratch.consolidations) outcomes.push_back(std::move(o));
    }
    pending_growth_.clear();
    return outcomes;
}

ScopeCandidates TreeIndex::nodes_in_scope(MemoryScope scope, const std::optional<TimeInterval>& window_filter,
                                          const EventLookup& events) const {
    ScopeCandidates out;
    std::set<std::string> seen_frags;
    for (const auto& n : nodes_) {
        if (window_filter && !n.window.intersects(*window_filter)) continue;
        if (n.kind == NodeKind::leaf) {
            out.event_ids.push_back(n.event_id);
            if (scope != MemoryScope::Long) {
                if (const MemoryEvent* ev = events(n.event_id)) {
                    for (const auto& fid : ev->frag_ids)
                        if (seen_frags.insert(fid).second) out.fragment_ids.push_back(fid);
                }
            }
        } else if (scope != MemoryScope::Short) {
            out.summary_node_ids.push_back(n.id);
        }
    }
    return out;
}

std::vector<std::string> TreeIndex::descendant_event_ids(const std::string& node_id) const {
    std::vector<std::string> out;
    std::vector<const TreeNode*> stack{node(node_id)};
    if (!stack.back()) return out;
    while (!stack.empty()) {
        const TreeNode* n = stack.back();
        stack.pop_back();
        if (n->kind == NodeKind::leaf) {
            out.push_back(n->event_id);
            continue;
        }
        // Children pushed in reverse so traversal follows attach order.
        for (auto it = n->child_ids.rbegin(); it != n->child_ids.rend(); ++it) stack.push_back(node(*it));
    }
    return out;
}

json TreeIndex::dump() const {
    json nodes = json::array();
    for (const auto& n : nodes_) {
        json jn = {
            {"id", n.id},
            {"level", n.level},
            {"kind", n.kind == NodeKind::leaf ? "leaf" : "summary"},
            {"window", {{"start", n.window.start}, {"end", n.window.end}}},
            {"window_key", n.window_key},
            {"payload_text", n.payload_text},
            {"child_ids", n.child_ids},
            {"parent_id", n.parent_id},
            {"source_count", n.source_count},
            {"reinforcement_count", n.reinforcement_count},
            {"last_reinforced", n.last_reinforced},
            {"last_child_ts", n.last_child_ts},
        };
        if (n.kind == NodeKind::leaf) jn["event_id"] = n.event_id;
        if (!n.memory_kind.empty()) jn["memory_kind"] = n.memory_kind;
        if (!n.stability.empty()) jn["stability"] = n.stability;
        if (n.degraded_summary) jn["degraded_summary"] = true;
        nodes.push_back(std::move(jn));
    }
    return json{{"nodes", nodes}};
}

TreeIndex TreeIndex::from_dump(const json& j, const LevelSchedule& schedule, bool adjacent_window_candidates,
                               const std::function<EmbeddingVector(const std::string&)>& event_embedding) {
    TreeIndex tree(schedule, adjacent_window_candidates);
    std::int64_t max_id = 0;
    for (const auto& jn : j.at("nodes")) {
        TreeNode n;
        n.id = jn.at("id").get<std::string>();
        n.level = jn.at("level").get<int>();
        n.kind = jn.at("kind").get<std::string>() == "leaf" ? NodeKind::leaf : NodeKind::summary;
        n.window = {jn.at("window").at("start").get<std::int64_t>(),
                    jn.at("window").at("end").get<std::int64_t>()};
        n.window_key = jn.at("window_key").get<std::int64_t>();
        n.payload_text = jn.value("payload_text", "");
        if (jn.contains("event_id")) n.event_id = jn.at("event_id").get<std::string>();
        n.memory_kind = jn.value("memory_kind", "");
        n.stability = jn.value("stability", "");
        n.degraded_summary = jn.value("degraded_summary", false);
        n.child_ids = jn.at("child_ids").get<std::vector<std::string>>();
        n.parent_id = jn.value("parent_id", "");
        n.source_count = jn.at("source_count").get<std::int64_t>();
        n.reinforcement_count = jn.at("reinforcement_count").get<std::int64_t>();
        n.last_reinforced = jn.at("last_reinforced").get<std::int64_t>();
        n.last_child_ts = jn.at("last_child_ts").get<std::int64_t>();
        if (n.id.size() > 1) max_id = std::max<std::int64_t>(max_id, std::strtoll(n.id.c_str() + 1, nullptr, 10));

        tree.by_id_[n.id] = tree.nodes_.size();
        tree.by_window_[{n.level, n.window_key}].push_back(n.id);
        if (n.kind == NodeKind::leaf) tree.leaf_by_event_[n.event_id] = n.id;
        tree.nodes_.push_back(std::move(n));
    }
    tree.next_id_ = max_id + 1;

    // Centroids are derived state: leaves take their event embedding, parents
    // recompute the renormalized child mean level by level.
    std::vector<std::size_t> order(tree.nodes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&tree](std::size_t a, std::size_t b) {
        return tree.nodes_[a].level < tree.nodes_[b].level;
    });
    for (std::size_t idx : order) {
        TreeNode& n = tree.nodes_[idx];
        if (n.kind == NodeKind::leaf) {
            n.centroid = event_embedding(n.event_id);
        } else {
            tree.recompute_centroid(n);
        }
    }
    return tree;
}

}  // namespace engram
