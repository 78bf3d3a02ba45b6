#include "engram/engine.hpp"

#include <algorithm>
#include <set>

#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

json IngestReport::to_json() const {
    return json{
        {"fragments_ingested", fragments_ingested},
        {"duplicates", duplicates},
        {"events_added", events_added},
        {"events_reinforced", events_reinforced},
        {"entities_created", entities_created},
        {"entities_merged", entities_merged},
        {"relations_inserted", relations_inserted},
        {"consolidations", consolidations},
        {"degraded_extractions", degraded_extractions},
        {"overlap_edges_added", overlap_edges_added},
    };
}

MemoryEngine::MemoryEngine(EngineConfig cfg) : MemoryEngine(std::move(cfg), ProviderSet{}) {
    providers_ = make_providers(cfg_, *ledger_);
    extractor_ = std::make_unique<Extractor>(*providers_.chat, *prompts_, *ledger_,
                                             cfg_.retrieval.neighbor_window);
}

MemoryEngine::MemoryEngine(EngineConfig cfg, ProviderSet providers)
    : cfg_(std::move(cfg)),
      ledger_(std::make_unique<CostLedger>()),
      prompts_(std::make_unique<PromptCatalog>(PromptCatalog::load_with_overrides(cfg_.prompts_path))),
      providers_(std::move(providers)),
      tree_(cfg_.levels, cfg_.retrieval.adjacent_window_candidates),
      graph_(cfg_.graph) {
    cfg_.validate();
    if (providers_.chat)
        extractor_ = std::make_unique<Extractor>(*providers_.chat, *prompts_, *ledger_,
                                                 cfg_.retrieval.neighbor_window);
}

ConsolidateFn MemoryEngine::consolidate_fn() {
    return [this](const std::vector<ConsolidationChild>& children) {
        return extractor_->consolidate_payloads(children);
    };
}

void MemoryEngine::apply_consolidation_outcomes(const std::vector<ConsolidationOutcome>& outcomes,
                                                UnixSeconds at, int* counter) {
    for (const auto& outcome : outcomes) {
        std::set<std::string> seen;
        for (const auto& cited : outcome.cited_event_ids) {
            if (!seen.insert(cited).second) continue;
            if (store_.event(cited)) store_.reinforce_event_consolidated(cited, at);
        }
        if (counter) ++(*counter);
    }
}

MemoryEngine::RecordOutcome MemoryEngine::add_record(const json& raw) {
    RecordOutcome out;
    const auto ingest = store_.ingest_fragment(raw);
    out.fragment_id = ingest.fragment->id;
    out.created = ingest.created;
    if (!ingest.created) return out;  // idempotent re-ingestion: nothing to index
    index_fragment(*ingest.fragment, out);
    return out;
}

void MemoryEngine::index_fragment(const MemoryFragment& frag, RecordOutcome& out) {
    // Fragment embedding backs SHORT-scope vector search.
    const auto frag_vecs = providers_.embeddings->embed({frag.text}, CostStage::index);
    store_.set_fragment_embedding(frag.id, store_.vectors().add(frag_vecs[0]));

    const auto neighbors = store_.prior_neighbors(frag.id, cfg_.retrieval.neighbor_window);
    auto events_result = extractor_->extract_events(frag, neighbors);
    if (events_result.degraded) {
        ++store_.degraded_extractions;
        out.degraded = true;
    }

    const auto active = current_active_levels();
    const SummaryPolicy policy =
        cfg_.provider.mode == ProviderMode::mock ? SummaryPolicy::immediate : SummaryPolicy::debounced;

    for (auto& ev : events_result.events) {
        const std::string norm = MemoryStore::normalized_text_key(ev.event_text);
        if (const MemoryEvent* existing = store_.find_event_by_normalized_text(norm); existing && !norm.empty()) {
            // Repeated mention: reinforce instead of inserting a duplicate leaf.
            store_.reinforce_event(existing->id, ev.time_range.start, frag.id);
            ++out.events_reinforced;
            continue;
        }
        const MemoryEvent& stored = store_.add_event(std::move(ev));
        const auto vecs = providers_.embeddings->embed({stored.event_text}, CostStage::index);
        const std::int32_t emb_id = store_.vectors().add(vecs[0]);
        store_.set_event_embedding(stored.id, emb_id);
        ++out.events_added;

        const auto report = tree_.insert_event(*store_.event(stored.id), vecs[0], active, consolidate_fn(),
                                               policy, cfg_.retrieval.summary_debounce_growth);
        apply_consolidation_outcomes(report.consolidations, frag.timestamp, nullptr);
    }

    auto entity_result = extractor_->extract_entities_relations(frag);
    if (entity_result.degraded) {
        ++store_.degraded_extractions;
        out.degraded = true;
    }
    store_.extraction_warnings +=
        entity_result.dropped_self_relations + entity_result.dropped_unknown_endpoints;

    std::vector<std::string> touched;
    for (const auto& ex : entity_result.entities) {
        const auto resolved = graph_.resolve_entity(ex, frag.id, frag.timestamp);
        if (resolved.resolution == Resolution::created) {
            // Name embeddings back vector seed matching.
            const auto vecs = providers_.embeddings->embed({graph_.entity(resolved.entity_id)->canonical_name},
                                                           CostStage::index);
            graph_.entity_mut(resolved.entity_id)->embedding_id = store_.vectors().add(vecs[0]);
        }
        touched.push_back(resolved.entity_id);
    }
    for (const auto& rel : entity_result.relations) {
        try {
            graph_.insert_relation(rel, frag.id, frag.timestamp);
        } catch (const UnresolvedEndpointError&) {
            ++store_.extraction_warnings;
        }
    }

    // Profile maintenance for every entity touched by this fragment.
    std::set<std::string> seen;
    for (const auto& id : touched) {
        if (!seen.insert(id).second) continue;
        const EntityNode* node = graph_.entity(id);
        std::vector<const MemoryEvent*> candidates;
        std::set<std::string> seen_events;
        for (const auto& fid : node->fragment_links)
            for (const auto& eid : store_.event_ids_for_fragment(fid))
                if (seen_events.insert(eid).second) candidates.push_back(store_.event(eid));
        graph_.update_profile(id, candidates, frag.timestamp);
    }
}

IngestReport MemoryEngine::ingest_jsonl(std::istream& in) {
    IngestReport report;
    std::string line;
    while (std::getline(in, line)) {
        const std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        const json raw = json::parse(trimmed);
        const auto entities_before = graph_.entities().size();
        const auto edges_before = graph_.semantic_edge_count();
        const auto outcome = add_record(raw);
        if (outcome.created) {
            ++report.fragments_ingested;
        } else {
            ++report.duplicates;
        }
        report.events_added += outcome.events_added;
        report.events_reinforced += outcome.events_reinforced;
        report.entities_created += static_cast<int>(graph_.entities().size() - entities_before);
        report.relations_inserted += static_cast<int>(graph_.semantic_edge_count() - edges_before);
        if (outcome.degraded) ++report.degraded_extractions;
    }
    if (cfg_.provider.mode != ProviderMode::mock) {
        const auto outcomes = tree_.flush_pending(consolidate_fn());
        int flushed = 0;
        apply_consolidation_outcomes(outcomes, store_.max_fragment_ts().value_or(0), &flushed);
        report.consolidations += flushed;
    }
    report.overlap_edges_added = graph_.repair_overlap_edges();
    return report;
}

QueryResult MemoryEngine::query(const std::string& text, UnixSeconds query_time, std::optional<int> k,
                                std::optional<MemoryScope> scope_override) {
    Retriever retriever(store_, tree_, graph_, providers_, *prompts_, cfg_, *ledger_);
    return retriever.run(text, query_time, k, scope_override);
}

StoreManifest MemoryEngine::save(const std::string& dir) const {
    return save_store(dir, store_, tree_, graph_, cfg_);
}

MemoryEngine MemoryEngine::load(const std::string& dir, EngineConfig cfg) {
    MemoryEngine engine(std::move(cfg));
    LoadedStore loaded = load_store(dir, engine.cfg_);
    engine.store_ = std::move(loaded.store);
    engine.tree_ = std::move(loaded.tree);
    engine.graph_ = std::move(loaded.graph);
    return engine;
}

MemoryEngine MemoryEngine::load(const std::string& dir, EngineConfig cfg, ProviderSet providers) {
    MemoryEngine engine(std::move(cfg), std::move(providers));
    LoadedStore loaded = load_store(dir, engine.cfg_);
    engine.store_ = std::move(loaded.store);
    engine.tree_ = std::move(loaded.tree);
    engine.graph_ = std::move(loaded.graph);
    return engine;
}

std::set<int> MemoryEngine::current_active_levels() const {
    return active_levels(store_.history_age_days(), cfg_.levels.max_level());
}

}  // namespace engram
