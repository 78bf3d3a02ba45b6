#include <set>

#include "doctest.h"

#include "engram/mock_provider.hpp"
#include "engram/rules.hpp"
#include "engram/tree.hpp"
#include "testutil.hpp"

using namespace engram;

namespace {

// Rule-driven consolidation, same path the mock engine uses.
ConsolidationResult rule_consolidate(const std::vector<ConsolidationChild>& children) {
    nlohmann::json input;
    auto arr = nlohmann::json::array();
    for (const auto& c : children)
        arr.push_back({{"id", c.id}, {"text", c.text}, {"time_range", {c.range.start, c.range.end}}});
    input["children"] = arr;
    const auto reply = rules::consolidate(input);
    ConsolidationResult result;
    for (const auto& item : reply.at("consolidated_events")) {
        ConsolidationItem ci;
        ci.consolidated_text = item.at("consolidated_text").get<std::string>();
        ci.source_event_ids = item.at("source_event_ids").get<std::vector<std::string>>();
        ci.stability = item.value("stability", "stable");
        result.items.push_back(std::move(ci));
    }
    for (const auto& u : reply.at("unmerged_event_ids")) result.unmerged_ids.push_back(u.get<std::string>());
    return result;
}

struct TreeHarness {
    CostLedger ledger;
    std::shared_ptr<CallGate> gate = std::make_shared<CallGate>(4);
    MockEmbeddingProvider embed{256, 42, ledger, gate};
    TreeIndex tree{LevelSchedule::defaults()};
    int next_event = 1;

    MemoryEvent make_event(const std::string& text, UnixSeconds ts) {
        MemoryEvent ev;
        ev.id = "ev" + std::to_string(next_event++);
        ev.event_text = text;
        ev.frag_ids = {"f1"};
        ev.time_range = TimeInterval::point(ts);
        ev.last_reinforced = ts;
        return ev;
    }

    InsertionReport insert(const MemoryEvent& ev, const std::set<int>& active) {
        return tree.insert_event(ev, embed.embed_one(ev.event_text), active, rule_consolidate);
    }
};

}  // namespace

TEST_CASE("active level schedule follows the 7/30-day rule") {
    CHECK(active_levels(3.0) == std::set<int>{1, 2});
    CHECK(active_levels(0.0) == std::set<int>{1, 2});
    CHECK(active_levels(6.999) == std::set<int>{1, 2});
    CHECK(active_levels(7.0) == std::set<int>{1, 2, 3});
    CHECK(active_levels(10.0) == std::set<int>{1, 2, 3});
    CHECK(active_levels(29.99) == std::set<int>{1, 2, 3});
    CHECK(active_levels(30.0) == std::set<int>{1, 2, 3, 4});
    CHECK(active_levels(400.0) == std::set<int>{1, 2, 3, 4});
    CHECK_THROWS(active_levels(-1.0));
}

TEST_CASE("first event creates one leaf plus single-child parents per active level") {
    TreeHarness h;
    const auto ev = h.make_event("Sam planted tomato seedlings in the garden.", 1683453600);
    const auto report = h.insert(ev, {1, 2, 3, 4});
    CHECK(report.created_node_ids.size() == 4);  // leaf + level 2..4 parents
    CHECK(report.consolidations_triggered == 0);

    const TreeNode* leaf = h.tree.leaf_for_event(ev.id);
    REQUIRE(leaf != nullptr);
    CHECK(leaf->level == 1);
    CHECK(leaf->payload_text == ev.event_text);

    // Each ancestor reuses the child text verbatim (single-child rule).
    const TreeNode* parent = h.tree.node(leaf->parent_id);
    while (parent) {
        CHECK(parent->payload_text == ev.event_text);
        CHECK(parent->child_ids.size() == 1);
        CHECK(parent->source_count == 1);
        parent = parent->parent_id.empty() ? nullptr : h.tree.node(parent->parent_id);
    }
}

TEST_CASE("same-day events above alpha share a level-2 parent and consolidate") {
    TreeHarness h;
    const auto a = h.make_event("Sam planted tomato seedlings in garden bed one.", 1683453600);
    const auto b = h.make_event("Sam planted tomato seedlings in garden bed two.", 1683457200);
    // Precondition of this construction: the mock cosine clears alpha_2.
    const double sim = cosine(h.embed.embed_one(a.event_text), h.embed.embed_one(b.event_text));
    REQUIRE(sim >= 0.8);

    h.insert(a, {1, 2});
    const auto report = h.insert(b, {1, 2});
    CHECK(report.consolidations_triggered >= 1);

    const TreeNode* la = h.tree.leaf_for_event(a.id);
    const TreeNode* lb = h.tree.leaf_for_event(b.id);
    REQUIRE(la->parent_id == lb->parent_id);
    const TreeNode* parent = h.tree.node(la->parent_id);
    CHECK(parent->child_ids.size() == 2);
    CHECK(parent->source_count == 2);
    CHECK(parent->reinforcement_count == 1);

    // Attach-time threshold soundness is recorded in the report.
    bool saw_attach = false;
    for (const auto& att : report.attachments) {
        if (!att.created_new_parent && att.parent_level == 2) {
            saw_attach = true;
            CHECK(att.similarity >= 0.8);
        }
    }
    CHECK(saw_attach);

    // The consolidation cited both events.
    REQUIRE(report.consolidations.size() >= 1);
    const auto& cited = report.consolidations[0].cited_event_ids;
    CHECK(std::find(cited.begin(), cited.end(), a.id) != cited.end());
    CHECK(std::find(cited.begin(), cited.end(), b.id) != cited.end());
}

TEST_CASE("same-day events below alpha become sibling level-2 parents") {
    TreeHarness h;
    const auto a = h.make_event("Sam planted tomato seedlings in the garden.", 1683453600);
    const auto b = h.make_event("Quarterly derivatives ledger reconciliation finished.", 1683457200);
    const double sim = cosine(h.embed.embed_one(a.event_text), h.embed.embed_one(b.event_text));
    REQUIRE(sim < 0.8);

    h.insert(a, {1, 2});
    const auto report = h.insert(b, {1, 2});

    const TreeNode* la = h.tree.leaf_for_event(a.id);
    const TreeNode* lb = h.tree.leaf_for_event(b.id);
    CHECK(la->parent_id != lb->parent_id);
    const TreeNode* pa = h.tree.node(la->parent_id);
    const TreeNode* pb = h.tree.node(lb->parent_id);
    CHECK(pa->level == 2);
    CHECK(pb->level == 2);
    CHECK(pa->window_key == pb->window_key);  // same week window

    // Sibling separation recorded: the rejected best similarity was < alpha.
    bool saw_new_parent = false;
    for (const auto& att : report.attachments) {
        if (att.created_new_parent && att.parent_level == 2) {
            saw_new_parent = true;
            CHECK(att.best_rejected < 0.8);
            CHECK(att.candidate_count == 1);
        }
    }
    CHECK(saw_new_parent);
}

TEST_CASE("insertion stops above the highest active level") {
    TreeHarness h;
    const auto ev = h.make_event("Riley practiced violin scales.", 1683453600);
    h.insert(ev, {1, 2});
    const TreeNode* leaf = h.tree.leaf_for_event(ev.id);
    const TreeNode* l2 = h.tree.node(leaf->parent_id);
    REQUIRE(l2 != nullptr);
    CHECK(l2->level == 2);
    CHECK(l2->parent_id.empty());  // level 3 inactive, no month parent
    CHECK(h.tree.level_counts().count(3) == 0);
}

TEST_CASE("missing embedding is a hard error; duplicate leaves rejected") {
    TreeHarness h;
    const auto ev = h.make_event("text here.", 1000000);
    CHECK_THROWS(h.tree.insert_event(ev, EmbeddingVector{}, {1, 2}, rule_consolidate));
    h.insert(ev, {1, 2});
    CHECK_THROWS(h.insert(ev, {1, 2}));
}

TEST_CASE("parent windows cover the union of child windows across ISO week straddles") {
    TreeHarness h;
    // 2023-04-29 (Sat) and 2023-05-01 (Mon): different ISO weeks, and the
    // Sat's week [Apr 24, Apr 30] belongs to April while May events open a
    // new month window.
    const auto apr = h.make_event("Maya repaired the old sailboat hull panel one.", 1682762400);   // Apr 29
    const auto may = h.make_event("Maya repaired the old sailboat hull panel two.", 1682938800);   // May 1
    h.insert(apr, {1, 2, 3, 4});
    h.insert(may, {1, 2, 3, 4});
    for (const TreeNode* n : h.tree.all_nodes()) {
        if (n->kind == NodeKind::leaf) continue;
        TimeInterval hull = h.tree.node(n->child_ids.front())->window;
        for (const auto& cid : n->child_ids) hull = TimeInterval::hull(hull, h.tree.node(cid)->window);
        CHECK(n->window.start <= hull.start);
        CHECK(n->window.end >= hull.end);
    }
}

TEST_CASE("nodes_in_scope filters by kind and window") {
    TreeHarness h;
    std::vector<MemoryEvent> events;
    events.push_back(h.make_event("Noah debugged the payment service ticket one.", 1683453600));
    events.push_back(h.make_event("Noah debugged the payment service ticket two.", 1683457200));
    events.push_back(h.make_event("Priya baked sourdough bread on Sunday.", 1683539900));
    std::map<std::string, MemoryEvent> by_id;
    for (const auto& ev : events) {
        h.insert(ev, {1, 2});
        by_id[ev.id] = ev;
    }
    const auto lookup = [&by_id](const std::string& id) -> const MemoryEvent* {
        auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &it->second;
    };

    const auto short_scope = h.tree.nodes_in_scope(MemoryScope::Short, std::nullopt, lookup);
    CHECK(short_scope.event_ids.size() == 3);
    CHECK(short_scope.fragment_ids.size() == 1);  // all cite f1
    CHECK(short_scope.summary_node_ids.empty());

    const auto long_scope = h.tree.nodes_in_scope(MemoryScope::Long, std::nullopt, lookup);
    CHECK(long_scope.event_ids.size() == 3);
    CHECK(long_scope.fragment_ids.empty());
    CHECK(long_scope.summary_node_ids.size() >= 2);

    const auto mixed = h.tree.nodes_in_scope(MemoryScope::Mixed, std::nullopt, lookup);
    CHECK(mixed.event_ids.size() == 3);
    CHECK(mixed.fragment_ids.size() == 1);
    CHECK(mixed.summary_node_ids.size() == long_scope.summary_node_ids.size());

    // A window excluding everything yields an empty candidate set.
    const auto none = h.tree.nodes_in_scope(MemoryScope::Mixed, TimeInterval{1, 2}, lookup);
    CHECK(none.event_ids.empty());
    CHECK(none.fragment_ids.empty());
    CHECK(none.summary_node_ids.empty());
}

TEST_CASE("identical insertion order produces identical tree shape and payloads") {
    auto build = [] {
        TreeHarness h;
        const std::vector<std::pair<std::string, UnixSeconds>> inputs = {
            {"Sam planted tomato seedlings in bed one.", 1683453600},
            {"Sam planted tomato seedlings in bed two.", 1683457200},
            {"Riley practiced violin scales at dawn.", 1683460800},
            {"Sam planted tomato seedlings in bed three.", 1683547200},
        };
        for (const auto& [text, ts] : inputs) h.insert(h.make_event(text, ts), {1, 2, 3});
        return h.tree.dump().dump();
    };
    CHECK(build() == build());
}

TEST_CASE("leaf bijection on a mixed corpus") {
    TreeHarness h;
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) {
        auto ev = h.make_event("Omar studied organic chemistry chapter " + std::to_string(i) + ".",
                               1683453600 + i * 7200);
        ids.push_back(ev.id);
        h.insert(ev, {1, 2});
    }
    std::set<std::string> leaf_events;
    for (const TreeNode* n : h.tree.all_nodes()) {
        if (n->kind != NodeKind::leaf) continue;
        CHECK(leaf_events.insert(n->event_id).second);  // one leaf per event
    }
    CHECK(leaf_events.size() == ids.size());
    for (const auto& id : ids) CHECK(h.tree.leaf_for_event(id) != nullptr);
}

TEST_CASE("debounced summary policy defers regeneration until growth or flush") {
    TreeHarness h;
    int consolidate_calls = 0;
    auto counting = [&consolidate_calls](const std::vector<ConsolidationChild>& children) {
        ++consolidate_calls;
        return rule_consolidate(children);
    };
    const auto a = h.make_event("Felix catalogued meteor observations entry one.", 1683453600);
    const auto b = h.make_event("Felix catalogued meteor observations entry two.", 1683457200);
    const auto c = h.make_event("Felix catalogued meteor observations entry three.", 1683460800);
    h.tree.insert_event(a, h.embed.embed_one(a.event_text), {1, 2}, counting, SummaryPolicy::debounced, 2);
    h.tree.insert_event(b, h.embed.embed_one(b.event_text), {1, 2}, counting, SummaryPolicy::debounced, 2);
    CHECK(consolidate_calls == 0);  // first attach deferred
    h.tree.insert_event(c, h.embed.embed_one(c.event_text), {1, 2}, counting, SummaryPolicy::debounced, 2);
    CHECK(consolidate_calls == 1);  // growth threshold reached
    const auto outcomes = h.tree.flush_pending(counting);
    CHECK(outcomes.empty());  // nothing left pending

    // A fresh pending entry flushes on demand.
    const auto d = h.make_event("Felix catalogued meteor observations entry four.", 1683464400);
    h.tree.insert_event(d, h.embed.embed_one(d.event_text), {1, 2}, counting, SummaryPolicy::debounced, 2);
    const auto flushed = h.tree.flush_pending(counting);
    CHECK(flushed.size() == 1);
}
