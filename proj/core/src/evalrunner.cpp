#include "engram/evalrunner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace engram {

namespace fs = std::filesystem;
using nlohmann::json;

Dataset Dataset::from_json(const json& j) {
    Dataset ds;
    for (const auto& jc : j.value("conversations", json::array())) {
        RawConversation conv;
        conv.id = jc.at("id").get<std::string>();
        for (const auto& f : jc.at("fragments")) {
            json rec = f;
            if (!rec.contains("conversation_id")) rec["conversation_id"] = conv.id;
            conv.fragments.push_back(std::move(rec));
        }
        ds.conversations.push_back(std::move(conv));
    }
    for (const auto& jq : j.value("questions", json::array())) {
        QAItem item;
        item.question = jq.at("question").get<std::string>();
        item.gold_answer = jq.at("gold_answer").get<std::string>();
        if (item.gold_answer.empty()) throw std::invalid_argument("dataset: empty gold_answer");
        item.category = jq.value("category", "uncategorized");
        item.conversation_id = jq.at("conversation_id").get<std::string>();
        if (jq.contains("question_time") && jq.at("question_time").is_number())
            item.question_time = jq.at("question_time").get<std::int64_t>();
        ds.questions.push_back(std::move(item));
    }
    return ds;
}

Dataset Dataset::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    return from_json(json::parse(in));
}

json EvalRow::to_json() const {
    json cats = json::object();
    for (const auto& [name, m] : per_category) {
        cats[name] = {{"questions", m.questions},
                      {"f1", m.f1_mean()},
                      {"judge_accuracy", m.judge_accuracy()},
                      {"judge_parse_failures", m.judge_parse_failures}};
    }
    return json{
        {"top_k", top_k},
        {"per_category", cats},
        {"overall",
         {{"questions", overall.questions},
          {"f1", overall.f1_mean()},
          {"judge_accuracy", overall.judge_accuracy()},
          {"judge_parse_failures", overall.judge_parse_failures}}},
        {"skipped", skipped},
        {"costs",
         {{"indexing_ms", indexing_ms},
          {"indexing_tokens", indexing_tokens},
          {"index_storage_bytes", index_storage_bytes},
          {"retrieval_ms", retrieval_ms},
          {"retrieval_tokens", retrieval_tokens},
          {"generate_tokens", generate_tokens},
          {"judge_tokens", judge_tokens}}},
        {"gathered_candidates", gathered_candidates},
        {"follow_up_rounds", follow_up_rounds},
    };
}

json EvalReport::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) rows_json.push_back(r.to_json());
    return json{
        {"rows", rows_json},
        {"config_hash", config_hash},
        {"provider_mode", provider_mode},
        {"seed", seed},
    };
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    out << "k      questions  F1       Acc      pool     idx_tok  ret_tok\n";
    for (const auto& r : rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-6d %-10lld %-8.4f %-8.4f %-8lld %-8lld %-8lld\n", r.top_k,
                      static_cast<long long>(r.overall.questions), r.overall.f1_mean(),
                      r.overall.judge_accuracy(), static_cast<long long>(r.gathered_candidates),
                      static_cast<long long>(r.indexing_tokens), static_cast<long long>(r.retrieval_tokens));
        out << line;
        for (const auto& [name, m] : r.per_category) {
            std::snprintf(line, sizeof(line), "  %-20s n=%-5lld F1=%-8.4f Acc=%-8.4f\n", name.c_str(),
                          static_cast<long long>(m.questions), m.f1_mean(), m.judge_accuracy());
            out << line;
        }
    }
    return out.str();
}

EvalReport run_eval(const Dataset& dataset, const EngineConfig& cfg, const EvalOptions& opts) {
    EvalReport report;
    report.config_hash = cfg.content_hash();
    report.provider_mode = cfg.provider.mode == ProviderMode::mock ? "mock" : "live";
    report.seed = cfg.provider.mock_seed;

    std::vector<int> ks = opts.sweep_k;
    if (ks.empty()) ks.push_back(cfg.retrieval.top_k);

    const std::string store_root = opts.store_root.empty()
                                       ? (fs::temp_directory_path() / "engram-eval").string()
                                       : opts.store_root;

    // Index once per conversation; the k-sweep reuses the same engines.
    std::vector<std::unique_ptr<MemoryEngine>> engines;
    std::map<std::string, std::size_t> engine_by_conversation;
    std::int64_t indexing_ms = 0, indexing_tokens = 0, storage_bytes = 0;
    for (const auto& conv : dataset.conversations) {
        auto engine = std::make_unique<MemoryEngine>(cfg);
        std::string lines;
        for (const auto& frag : conv.fragments) lines += frag.dump() + "\n";
        std::istringstream in(lines);
        engine->ingest_jsonl(in);
        const auto index_costs = engine->ledger().totals(CostStage::index);
        indexing_ms += index_costs.wall_ms;
        indexing_tokens += index_costs.tokens();
        const std::string dir = (fs::path(store_root) / conv.id).string();
        engine->save(dir);
        storage_bytes += store_size_bytes(dir);
        engine_by_conversation[conv.id] = engines.size();
        engines.push_back(std::move(engine));
    }

    for (const int k : ks) {
        EvalRow row;
        row.top_k = k;
        row.indexing_ms = indexing_ms;
        row.indexing_tokens = indexing_tokens;
        row.index_storage_bytes = storage_bytes;

        struct Scored {
            std::string category;
            double f1 = 0.0;
            bool correct = false;
            bool parse_failed = false;
            bool skipped = false;
            std::int64_t gathered = 0;
            std::int64_t follow_ups = 0;
        };
        std::vector<Scored> scored(dataset.questions.size());

        // Per-stage totals before this row, so the row carries its own delta.
        std::vector<CostLedger::Totals> retrieve_before(engines.size()), generate_before(engines.size()),
            judge_before(engines.size());
        for (std::size_t e = 0; e < engines.size(); ++e) {
            retrieve_before[e] = engines[e]->ledger().totals(CostStage::retrieve);
            generate_before[e] = engines[e]->ledger().totals(CostStage::generate);
            judge_before[e] = engines[e]->ledger().totals(CostStage::judge);
        }

        const int parallelism =
            opts.question_parallelism > 0 ? opts.question_parallelism : cfg.provider.parallelism;
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= dataset.questions.size()) return;
                const QAItem& q = dataset.questions[i];
                Scored& s = scored[i];
                s.category = q.category;
                const auto engine_it = engine_by_conversation.find(q.conversation_id);
                if (engine_it == engine_by_conversation.end()) {
                    s.skipped = true;
                    continue;
                }
                MemoryEngine& engine = *engines[engine_it->second];
                // Default query time: one day past the conversation's end.
                const UnixSeconds t =
                    q.question_time.value_or(engine.store().max_fragment_ts().value_or(0) + 86400);
                const QueryResult result = engine.query(q.question, t, k);
                const auto simplified = simplify_answer(*engine.providers().chat, engine.prompts(),
                                                        engine.ledger(), q.question, result.final_answer);
                s.f1 = token_f1(simplified.answer, q.gold_answer).f1;
                // The judge sees the unsimplified answer.
                const auto verdict = judge(*engine.providers().chat, engine.prompts(), engine.ledger(),
                                           q.question, q.gold_answer, result.final_answer);
                s.correct = verdict.label == JudgeLabel::CORRECT;
                s.parse_failed = verdict.parse_failed;
                s.gathered = result.gathered_candidates;
                s.follow_ups = result.follow_up_rounds;
            }
        };
        std::vector<std::thread> threads;
        const int n_threads = std::max(1, std::min<int>(parallelism, static_cast<int>(dataset.questions.size())));
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int w = 0; w < n_threads; ++w) threads.emplace_back(worker);
        for (auto& th : threads) th.join();

        for (const auto& s : scored) {
            if (s.skipped) {
                ++row.skipped;
                continue;
            }
            auto& cat = row.per_category[s.category];
            ++cat.questions;
            cat.f1_sum += s.f1;
            if (s.correct) ++cat.judge_correct;
            if (s.parse_failed) ++cat.judge_parse_failures;
            ++row.overall.questions;
            row.overall.f1_sum += s.f1;
            if (s.correct) ++row.overall.judge_correct;
            if (s.parse_failed) ++row.overall.judge_parse_failures;
            row.gathered_candidates += s.gathered;
            row.follow_up_rounds += s.follow_ups;
        }

        for (std::size_t e = 0; e < engines.size(); ++e) {
            const auto retrieve_now = engines[e]->ledger().totals(CostStage::retrieve);
            const auto generate_now = engines[e]->ledger().totals(CostStage::generate);
            const auto judge_now = engines[e]->ledger().totals(CostStage::judge);
            row.retrieval_ms += (retrieve_now.wall_ms - retrieve_before[e].wall_ms) +
                                (generate_now.wall_ms - generate_before[e].wall_ms);
            row.retrieval_tokens += retrieve_now.tokens() - retrieve_before[e].tokens();
            row.generate_tokens += generate_now.tokens() - generate_before[e].tokens();
            row.judge_tokens += judge_now.tokens() - judge_before[e].tokens();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace engram
