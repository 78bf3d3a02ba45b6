#include "engram/retrieval.hpp"

#include <algorithm>
#include <regex>
#include <unordered_set>

#include "engram/rules.hpp"
#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

const char* coverage_mode_name(CoverageMode m) { return m == CoverageMode::local ? "local" : "global"; }

const char* source_kind_name(SourceKind k) {
    switch (k) {
        case SourceKind::fragment: return "fragment";
        case SourceKind::event: return "event";
        case SourceKind::summary: return "summary";
    }
    return "event";
}

json QueryPlan::to_json() const {
    json subs = json::array();
    for (const auto& sq : subqueries) {
        json js = {
            {"id", sq.id},
            {"text", sq.text},
            {"memory_scope", memory_scope_name(sq.scope)},
            {"coverage_mode", coverage_mode_name(sq.coverage)},
            {"deps", sq.deps},
        };
        js["type_hint"] = sq.type_hint ? json(*sq.type_hint) : json(nullptr);
        js["hint_time"] = sq.hint_time ? json::array({sq.hint_time->start, sq.hint_time->end}) : json(nullptr);
        subs.push_back(std::move(js));
    }
    return json{{"subqueries", subs}, {"dependency_graph", dependency_graph}, {"degraded", degraded}};
}

json EvidenceItem::to_json() const {
    json j = {
        {"kind", source_kind_name(kind)},
        {"source_id", source_id},
        {"text", text},
        {"interval", {interval.start, interval.end}},
        {"scores",
         {{"S", semantic},
          {"T", temporal ? json(*temporal) : json(nullptr)},
          {"R", robustness},
          {"F", final_score}}},
        {"provenance", provenance},
    };
    return j;
}

json SubAnswer::to_json() const {
    json j = {
        {"subquery_id", subquery_id},
        {"answer", answer_text},
        {"missing_info", missing_info},
        {"degraded", degraded},
        {"evidence_used", evidence_used},
        {"follow_up_rounds", follow_up_rounds},
    };
    if (follow_up) j["follow_up"] = *follow_up;
    return j;
}

json QueryResult::to_json() const {
    json evidence_json = json::array();
    for (const auto& e : evidence) evidence_json.push_back(e.to_json());
    json subs = json::array();
    for (const auto& s : sub_answers) subs.push_back(s.to_json());
    return json{
        {"final_answer", final_answer},
        {"plan", plan.to_json()},
        {"sub_answers", subs},
        {"evidence", evidence_json},
        {"follow_up_rounds", follow_up_rounds},
        {"gathered_candidates", gathered_candidates},
        {"degraded", degraded},
        {"costs", costs},
    };
}

std::vector<std::size_t> topological_order(const QueryPlan& plan) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < plan.subqueries.size(); ++i) index[plan.subqueries[i].id] = i;
    std::vector<int> indegree(plan.subqueries.size(), 0);
    std::vector<std::vector<std::size_t>> dependents(plan.subqueries.size());
    for (std::size_t i = 0; i < plan.subqueries.size(); ++i) {
        for (const auto& dep : plan.subqueries[i].deps) {
            const auto it = index.find(dep);
            if (it == index.end()) throw std::invalid_argument("unknown dep id: " + dep);
            dependents[it->second].push_back(i);
            ++indegree[i];
        }
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < indegree.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end());
        const std::size_t n = ready.front();
        ready.erase(ready.begin());
        order.push_back(n);
        for (std::size_t d : dependents[n])
            if (--indegree[d] == 0) ready.push_back(d);
    }
    if (order.size() != plan.subqueries.size()) throw std::invalid_argument("dependency cycle in plan");
    return order;
}

Retriever::Retriever(const MemoryStore& store, const TreeIndex& tree, const GraphIndex& graph,
                     const ProviderSet& providers, const PromptCatalog& prompts, const EngineConfig& cfg,
                     CostLedger& ledger)
    : store_(store), tree_(tree), graph_(graph), providers_(providers), prompts_(prompts), cfg_(cfg),
      ledger_(ledger) {}

EmbeddingVector Retriever::embed_cached(const std::string& text) {
    auto it = embed_cache_.find(text);
    if (it != embed_cache_.end()) return it->second;
    const auto vecs = providers_.embeddings->embed({text}, CostStage::retrieve);
    embed_cache_[text] = vecs[0];
    return vecs[0];
}

namespace {

bool counting_intent(const std::string& text) {
    static const std::regex counting(
        R"(\b(how many|count|number of|total|times|frequency|rate|list|names of)\b)", std::regex::icase);
    return std::regex_search(text, counting);
}

}  // namespace

std::optional<QueryPlan> Retriever::try_parse_plan(const std::string& text, const std::string& original,
                                                   UnixSeconds query_time) const {
    (void)query_time;
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("subqueries") || !j.at("subqueries").is_array())
        return std::nullopt;
    const auto& subs = j.at("subqueries");
    if (subs.empty() || subs.size() > 5) return std::nullopt;

    QueryPlan plan;
    std::set<std::string> ids;
    for (const auto& js : subs) {
        if (!js.is_object()) return std::nullopt;
        SubQuery sq;
        sq.id = js.value("id", "");
        sq.text = js.value("text", "");
        if (sq.id.empty() || sq.text.empty() || !ids.insert(sq.id).second) return std::nullopt;
        const auto scope = memory_scope_from_name(js.value("memory_scope", ""));
        if (!scope) return std::nullopt;
        sq.scope = *scope;
        const std::string coverage = js.value("coverage_mode", "");
        if (coverage == "local") sq.coverage = CoverageMode::local;
        else if (coverage == "global") sq.coverage = CoverageMode::global;
        else return std::nullopt;
        if (js.contains("type_hint") && js.at("type_hint").is_string())
            sq.type_hint = js.at("type_hint").get<std::string>();
        if (js.contains("deps") && js.at("deps").is_array())
            for (const auto& d : js.at("deps"))
                if (d.is_string()) sq.deps.push_back(d.get<std::string>());
        if (js.contains("hint_time") && js.at("hint_time").is_array() && js.at("hint_time").size() == 2 &&
            js.at("hint_time")[0].is_number() && js.at("hint_time")[1].is_number()) {
            TimeInterval hint{js.at("hint_time")[0].get<std::int64_t>(),
                              js.at("hint_time")[1].get<std::int64_t>()};
            if (!hint.valid()) return std::nullopt;
            sq.hint_time = hint;
        }
        // Prompt hard rule: counting and list intents retrieve globally.
        if (counting_intent(sq.text)) sq.coverage = CoverageMode::global;
        plan.subqueries.push_back(std::move(sq));
    }
    // Single-sub-query plans must carry the original query text verbatim.
    if (plan.subqueries.size() == 1 && plan.subqueries[0].text != original) return std::nullopt;
    if (j.contains("dependency_graph") && j.at("dependency_graph").is_object())
        for (const auto& [k, v] : j.at("dependency_graph").items())
            if (v.is_array()) plan.dependency_graph[k] = v.get<std::vector<std::string>>();
    try {
        topological_order(plan);  // validates dep ids and acyclicity
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
    return plan;
}

QueryPlan Retriever::plan_query(const std::string& query, UnixSeconds query_time) {
    ChatRequest req;
    req.user_payload = substitute_slots(prompts_.planner, {{"QUERY_TEXT", query}}) +
                       "\nQuery time: " + std::to_string(query_time);
    req.json_mode = true;

    for (int ask = 0; ask < 2; ++ask) {
        try {
            const ChatResponse resp = providers_.chat->chat(req, CostStage::retrieve);
            if (auto plan = try_parse_plan(resp.text, query, query_time)) return *plan;
        } catch (const ProviderError&) {
            break;  // transport/structured failure: straight to the fallback plan
        }
    }
    // Degraded fallback: the query itself, MIXED scope, local coverage.
    QueryPlan plan;
    SubQuery sq;
    sq.id = "q1";
    sq.text = query;
    sq.scope = MemoryScope::Mixed;
    sq.coverage = counting_intent(query) ? CoverageMode::global : CoverageMode::local;
    plan.subqueries.push_back(std::move(sq));
    plan.dependency_graph["q1"] = {};
    plan.degraded = true;
    return plan;
}

std::set<std::string> Retriever::locate_seed_entities(const SubQuery& sq) {
    return locate_seed_entities(sq, sq.text);
}

std::set<std::string> Retriever::locate_seed_entities(const SubQuery& sq, const std::string& query_text) {
    (void)sq;
    std::set<std::string> seeds;
    if (graph_.entities().empty()) return seeds;

    // Lexical: normalized names and aliases as word-bounded substrings.
    const std::string padded = " " + text::normalize_name(query_text) + " ";
    for (const EntityNode* e : graph_.entities()) {
        auto matches = [&padded](const std::string& name) {
            return !name.empty() && padded.find(" " + name + " ") != std::string::npos;
        };
        if (matches(e->canonical_name)) {
            seeds.insert(e->id);
            continue;
        }
        for (const auto& alias : e->aliases) {
            if (matches(alias)) {
                seeds.insert(e->id);
                break;
            }
        }
    }

    // Vector: top-N entity-name embeddings above the similarity floor.
    const EmbeddingVector qv = embed_cached(query_text);
    struct Scored {
        double sim;
        std::size_t order;
        const EntityNode* node;
    };
    std::vector<Scored> scored;
    std::size_t order = 0;
    for (const EntityNode* e : graph_.entities()) {
        if (e->embedding_id >= 0) {
            const double sim = cosine(qv, store_.vectors().get(e->embedding_id));
            if (sim >= cfg_.retrieval.seed_min_cosine) scored.push_back({sim, order, e});
        }
        ++order;
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.order < b.order;
    });
    for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(cfg_.retrieval.seed_top_n); ++i)
        seeds.insert(scored[i].node->id);
    return seeds;
}

std::vector<EvidenceItem> Retriever::gather_and_rank(const SubQuery& sq, const std::string& query_text,
                                                     const std::set<std::string>& seeds,
                                                     UnixSeconds query_time, int k) {
    const EmbeddingVector qv = embed_cached(query_text);

    // Hint window widened by one day-level window per side so boundary
    // evidence survives the filter; the raw hint still scores T.
    std::optional<TimeInterval> widened;
    if (sq.hint_time) widened = TimeInterval{sq.hint_time->start - 86400, sq.hint_time->end + 86400};

    struct Candidate {
        SourceKind kind;
        std::string id;
    };
    std::vector<Candidate> candidates;
    std::unordered_set<std::string> seen;
    auto push = [&](SourceKind kind, const std::string& id) {
        const std::string key = std::string(source_kind_name(kind)) + ":" + id;
        if (seen.insert(key).second) candidates.push_back({kind, id});
    };

    // Graph route: seeds -> multi-hop expansion -> linked fragments -> leaf
    // events; scope rules still apply.
    const auto expanded = graph_.neighbors(seeds, cfg_.retrieval.hops, cfg_.retrieval.fanout);
    std::vector<std::string> graph_frags;
    std::unordered_set<std::string> seen_frag;
    for (const auto& eid : expanded) {
        const EntityNode* node = graph_.entity(eid);
        for (const auto& fid : node->fragment_links)
            if (seen_frag.insert(fid).second) graph_frags.push_back(fid);
    }
    std::sort(graph_frags.begin(), graph_frags.end());
    for (const auto& fid : graph_frags) {
        if (sq.scope != MemoryScope::Long) push(SourceKind::fragment, fid);
        for (const auto& evid : store_.event_ids_for_fragment(fid)) push(SourceKind::event, evid);
    }

    // Tree route: scope-filtered candidates, vector-searched.
    const auto scoped = tree_.nodes_in_scope(sq.scope, widened,
                                             [this](const std::string& id) { return store_.event(id); });
    for (const auto& fid : scoped.fragment_ids) push(SourceKind::fragment, fid);
    for (const auto& evid : scoped.event_ids) push(SourceKind::event, evid);
    for (const auto& nid : scoped.summary_node_ids) push(SourceKind::summary, nid);

    // Score every candidate with the event-level gathering score.
    std::vector<EvidenceItem> items;
    items.reserve(candidates.size());
    for (const auto& c : candidates) {
        EvidenceItem item;
        item.kind = c.kind;
        item.source_id = c.id;
        std::int64_t reinforcements = 0;
        UnixSeconds last = 0;
        if (c.kind == SourceKind::fragment) {
            const MemoryFragment* f = store_.fragment(c.id);
            if (!f || f->embedding_id < 0) continue;
            item.text = f->text;
            item.interval = TimeInterval::point(f->timestamp);
            item.semantic = cosine(qv, store_.vectors().get(f->embedding_id));
            item.provenance = {f->id};
            last = f->timestamp;
        } else if (c.kind == SourceKind::event) {
            const MemoryEvent* e = store_.event(c.id);
            if (!e || e->embedding_id < 0) continue;
            item.text = e->event_text;
            item.interval = e->time_range;
            item.semantic = cosine(qv, store_.vectors().get(e->embedding_id));
            item.provenance = e->frag_ids;
            reinforcements = e->reinforcement_count;
            last = e->last_reinforced;
        } else {
            const TreeNode* n = tree_.node(c.id);
            if (!n || n->centroid.empty()) continue;
            item.text = n->payload_text;
            item.interval = n->window;
            item.semantic = cosine(qv, n->centroid);
            std::set<std::string> frags;
            for (const auto& evid : tree_.descendant_event_ids(c.id))
                if (const MemoryEvent* e = store_.event(evid))
                    frags.insert(e->frag_ids.begin(), e->frag_ids.end());
            item.provenance.assign(frags.begin(), frags.end());
            reinforcements = n->reinforcement_count;
            last = n->last_reinforced;
        }
        if (sq.hint_time) item.temporal = temporal_relevance(item.interval, *sq.hint_time, cfg_.scoring);
        item.robustness = memory_robustness(query_time, last, static_cast<double>(reinforcements), cfg_.scoring);
        item.gather_score = event_level_score(item.semantic, item.temporal, item.robustness, cfg_.scoring);
        item.final_score = combined_score(item.semantic, item.temporal, item.robustness, cfg_.scoring);
        items.push_back(std::move(item));
    }

    // Gather budget; global coverage doubles it before the final cut.
    const int budget = sq.coverage == CoverageMode::global ? 2 * k : k;
    std::stable_sort(items.begin(), items.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
        if (a.gather_score != b.gather_score) return a.gather_score > b.gather_score;
        if (a.interval.end != b.interval.end) return a.interval.end > b.interval.end;
        return a.source_id < b.source_id;
    });
    if (items.size() > static_cast<std::size_t>(budget)) items.resize(static_cast<std::size_t>(budget));
    gathered_candidates_ += static_cast<std::int64_t>(items.size());

    // Optional rerank pass reorders the gathered pool (pass-through scores
    // equal the embedding cosine, so ordering is unchanged there).
    if (items.size() > 1 && providers_.reranker) {
        std::vector<std::string> texts;
        texts.reserve(items.size());
        for (const auto& it : items) texts.push_back(it.text);
        const auto ranked = providers_.reranker->rerank(query_text, texts, CostStage::retrieve);
        std::vector<EvidenceItem> reordered;
        reordered.reserve(items.size());
        for (const auto& r : ranked) reordered.push_back(std::move(items[static_cast<std::size_t>(r.index)]));
        items = std::move(reordered);
    }

    // Dedupe by source id, then by exact normalized text.
    std::vector<EvidenceItem> deduped;
    std::unordered_set<std::string> seen_ids, seen_texts;
    for (auto& it : items) {
        if (!seen_ids.insert(std::string(source_kind_name(it.kind)) + ":" + it.source_id).second) continue;
        const std::string norm = MemoryStore::normalized_text_key(it.text);
        if (!norm.empty() && !seen_texts.insert(norm).second) continue;
        deduped.push_back(std::move(it));
    }

    // Final ranking: combined score descending, recency then id as ties.
    std::stable_sort(deduped.begin(), deduped.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        if (a.interval.end != b.interval.end) return a.interval.end > b.interval.end;
        return a.source_id < b.source_id;
    });
    if (deduped.size() > static_cast<std::size_t>(k)) deduped.resize(static_cast<std::size_t>(k));
    return deduped;
}

SubAnswer Retriever::answer_subquery(const SubQuery& sq, const std::vector<EvidenceItem>& chain,
                                     const std::map<std::string, SubAnswer>& dep_answers) {
    SubAnswer answer;
    answer.subquery_id = sq.id;
    for (const auto& item : chain)
        answer.evidence_used.push_back(std::string(source_kind_name(item.kind)) + ":" + item.source_id);

    json input;
    input["subquery"] = sq.text;
    json evidence = json::array();
    for (const auto& item : chain) {
        evidence.push_back({{"id", item.source_id},
                            {"text", item.text},
                            {"time", {item.interval.start, item.interval.end}}});
    }
    input["evidence"] = evidence;
    json deps = json::object();
    for (const auto& dep_id : sq.deps) {
        const auto it = dep_answers.find(dep_id);
        if (it != dep_answers.end()) deps[dep_id] = it->second.answer_text;
    }
    input["dependency_answers"] = deps;

    ChatRequest req;
    req.system_prompt = prompts_.reasoner;
    req.user_payload = "Input JSON:\n" + input.dump();
    req.json_mode = true;
    try {
        const ChatResponse resp = providers_.chat->chat(req, CostStage::generate);
        const json parsed = json::parse(resp.text);
        answer.answer_text = parsed.value("answer", "");
        answer.missing_info = parsed.value("missing_info", answer.answer_text.empty());
    } catch (const ProviderError&) {
        answer.answer_text.clear();
        answer.missing_info = true;
        answer.degraded = true;
    }
    return answer;
}

std::optional<std::string> Retriever::missing_info_query(const std::string& original_query, const SubQuery& sq,
                                                         const SubAnswer& first_pass,
                                                         const std::vector<EvidenceItem>& chain) {
    json evidence = json::array();
    for (const auto& item : chain) evidence.push_back({{"id", item.source_id}, {"text", item.text}});
    json input = {
        {"query", original_query},
        {"subquery", sq.text},
        {"evidence", evidence},
        {"reason_output",
         {{"conclusions", first_pass.answer_text}, {"confidence", 0.0}, {"missing_info", true}}},
    };
    ChatRequest req;
    req.system_prompt = prompts_.missing_info;
    req.user_payload = "Input JSON:\n" + input.dump();
    req.json_mode = true;

    // Anchor tokens available in the first-pass evidence (stemmed).
    std::unordered_set<std::string> evidence_stems;
    for (const auto& item : chain)
        for (const auto& tok : rules::content_tokens(item.text))
            evidence_stems.insert(text::light_stem(tok));

    for (int ask = 0; ask < 2; ++ask) {
        std::string candidate;
        try {
            const ChatResponse resp = providers_.chat->chat(req, CostStage::generate);
            candidate = json::parse(resp.text).value("missing_info_query", "");
        } catch (const ProviderError&) {
            return std::nullopt;
        }
        if (candidate.empty()) continue;
        // Anti-echo: must differ from the subquery beyond normalization.
        if (MemoryStore::normalized_text_key(candidate) == MemoryStore::normalized_text_key(sq.text)) continue;
        // Anchor rule: at least one concrete token drawn from the evidence.
        bool anchored = false;
        for (const auto& tok : rules::content_tokens(candidate)) {
            if (evidence_stems.count(text::light_stem(tok))) {
                anchored = true;
                break;
            }
        }
        if (anchored) return candidate;
    }
    return std::nullopt;
}

std::string Retriever::synthesize(const std::string& query, const std::vector<SubAnswer>& ordered,
                                  bool& degraded) {
    static const char* kInsufficient = "Insufficient memory evidence.";
    bool any_usable = false;
    for (const auto& s : ordered)
        if (!s.answer_text.empty()) any_usable = true;
    if (!any_usable) return kInsufficient;

    json input;
    input["query"] = query;
    json subs = json::array();
    for (const auto& s : ordered)
        subs.push_back({{"id", s.subquery_id}, {"answer", s.answer_text}, {"missing_info", s.missing_info}});
    input["sub_answers"] = subs;

    ChatRequest req;
    req.system_prompt = prompts_.synthesizer;
    req.user_payload = "Input JSON:\n" + input.dump();
    req.json_mode = true;
    try {
        const ChatResponse resp = providers_.chat->chat(req, CostStage::generate);
        return json::parse(resp.text).value("answer", kInsufficient);
    } catch (const ProviderError&) {
        degraded = true;
        std::vector<std::string> parts;
        for (const auto& s : ordered)
            if (!s.answer_text.empty()) parts.push_back(s.answer_text);
        return parts.empty() ? kInsufficient : text::join(parts, " ");
    }
}

std::vector<EvidenceItem> Retriever::merge_chains(std::vector<EvidenceItem> first,
                                                  std::vector<EvidenceItem> second, int k) const {
    std::map<std::string, EvidenceItem> by_id;
    for (auto& item : first) {
        const std::string key = std::string(source_kind_name(item.kind)) + ":" + item.source_id;
        by_id.emplace(key, std::move(item));
    }
    for (auto& item : second) {
        const std::string key = std::string(source_kind_name(item.kind)) + ":" + item.source_id;
        auto it = by_id.find(key);
        if (it == by_id.end()) by_id.emplace(key, std::move(item));
        else if (item.final_score > it->second.final_score) it->second = std::move(item);
    }
    std::vector<EvidenceItem> merged;
    merged.reserve(by_id.size());
    for (auto& [_, item] : by_id) merged.push_back(std::move(item));
    std::stable_sort(merged.begin(), merged.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        if (a.interval.end != b.interval.end) return a.interval.end > b.interval.end;
        return a.source_id < b.source_id;
    });
    if (merged.size() > static_cast<std::size_t>(k)) merged.resize(static_cast<std::size_t>(k));
    return merged;
}

QueryResult Retriever::run(const std::string& query, UnixSeconds query_time, std::optional<int> k_override,
                           std::optional<MemoryScope> scope_override) {
    const int k = k_override.value_or(cfg_.retrieval.top_k);
    CostLedger::Totals before[4] = {
        ledger_.totals(CostStage::index), ledger_.totals(CostStage::retrieve),
        ledger_.totals(CostStage::generate), ledger_.totals(CostStage::judge)};

    QueryResult result;
    result.plan = plan_query(query, query_time);
    if (scope_override)
        for (auto& sq : result.plan.subqueries) sq.scope = *scope_override;
    result.degraded = result.plan.degraded;

    std::map<std::string, SubAnswer> answers;
    std::map<std::string, EvidenceItem> evidence_union;
    const auto order = topological_order(result.plan);
    for (const std::size_t idx : order) {
        const SubQuery& sq = result.plan.subqueries[idx];
        const auto seeds = locate_seed_entities(sq);
        auto chain = gather_and_rank(sq, sq.text, seeds, query_time, k);
        SubAnswer answer = answer_subquery(sq, chain, answers);

        if (answer.missing_info) {
            if (auto follow_up = missing_info_query(query, sq, answer, chain)) {
                SubQuery follow_sq = sq;  // same scope and budget, new retrieval text
                const auto follow_seeds = locate_seed_entities(sq, *follow_up);
                auto second = gather_and_rank(follow_sq, *follow_up, follow_seeds, query_time, k);
                chain = merge_chains(std::move(chain), std::move(second), k);
                SubAnswer retried = answer_subquery(sq, chain, answers);
                retried.follow_up_rounds = 1;
                if (retried.missing_info) retried.follow_up = *follow_up;
                answer = std::move(retried);
                result.follow_up_rounds += 1;
            }
        }
        if (answer.degraded) result.degraded = true;

        for (const auto& item : chain) {
            const std::string key = std::string(source_kind_name(item.kind)) + ":" + item.source_id;
            auto it = evidence_union.find(key);
            if (it == evidence_union.end()) evidence_union.emplace(key, item);
            else if (item.final_score > it->second.final_score) it->second = item;
        }
        answers[sq.id] = std::move(answer);
    }

    std::vector<SubAnswer> ordered;
    for (const std::size_t idx : order) ordered.push_back(answers[result.plan.subqueries[idx].id]);
    bool synth_degraded = false;
    result.final_answer = synthesize(query, ordered, synth_degraded);
    result.degraded = result.degraded || synth_degraded;
    result.sub_answers = std::move(ordered);

    for (auto& [_, item] : evidence_union) result.evidence.push_back(item);
    std::stable_sort(result.evidence.begin(), result.evidence.end(),
                     [](const EvidenceItem& a, const EvidenceItem& b) {
                         if (a.final_score != b.final_score) return a.final_score > b.final_score;
                         if (a.interval.end != b.interval.end) return a.interval.end > b.interval.end;
                         return a.source_id < b.source_id;
                     });
    result.gathered_candidates = gathered_candidates_;

    const CostStage stages[4] = {CostStage::index, CostStage::retrieve, CostStage::generate, CostStage::judge};
    json costs = json::object();
    for (int i = 0; i < 4; ++i) {
        const auto now = ledger_.totals(stages[i]);
        costs[cost_stage_name(stages[i])] = {
            {"prompt_tokens", now.prompt_tokens - before[i].prompt_tokens},
            {"completion_tokens", now.completion_tokens - before[i].completion_tokens},
            {"wall_ms", now.wall_ms - before[i].wall_ms},
            {"call_count", now.call_count - before[i].call_count},
        };
    }
    costs["follow_up_rounds"] = result.follow_up_rounds;
    result.costs = std::move(costs);
    return result;
}

}  // namespace engram
