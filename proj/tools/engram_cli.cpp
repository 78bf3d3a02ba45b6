// engram — command-line front end for the hybrid memory engine.
//
// Subcommands:
//   ingest <jsonl> --store <dir>       build or extend an index from records
//   query "<text>" --store <dir>       answer one question against an index
//   inspect tree|graph|event <id>      dump index structures as JSON
//   stats --store <dir>                index size counters
//   eval <dataset> --store-root <dir>  run the QA evaluation harness

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "engram/engine.hpp"
#include "engram/evalrunner.hpp"
#include "engram/store_io.hpp"

using nlohmann::json;

namespace {

engram::EngineConfig load_config(const std::string& config_path, const std::string& mode) {
    engram::EngineConfig cfg;
    if (!config_path.empty()) cfg = engram::EngineConfig::load_file(config_path);
    if (mode == "mock") cfg.provider.mode = engram::ProviderMode::mock;
    else if (mode == "live") cfg.provider.mode = engram::ProviderMode::live;
    else if (!mode.empty()) throw CLI::ValidationError("--mode must be mock or live");
    cfg.validate();
    return cfg;
}

engram::MemoryEngine open_store(const std::string& store_dir, const engram::EngineConfig& cfg) {
    return engram::MemoryEngine::load(store_dir, cfg);
}

std::vector<int> parse_k_list(const std::string& spec) {
    std::vector<int> ks;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        ks.push_back(std::stoi(part));
    }
    return ks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"engram: temporal-semantic tree + knowledge-graph memory engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode;
    app.add_option("--config", config_path, "Engine config JSON file")->capture_default_str();
    app.add_option("--mode", mode, "Provider mode override: mock (offline, deterministic) or live")
        ->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Ingest a JSON Lines fragment file into a store");
    std::string ingest_file, ingest_store;
    ingest->add_option("jsonl", ingest_file, "Input JSONL file; one record per line")->required();
    ingest->add_option("--store", ingest_store, "Store directory (created or extended)")->required();

    // query
    auto* query = app.add_subcommand("query", "Answer a question against a store");
    std::string query_text, query_store, query_time_raw, scope_override;
    int query_k = 0;
    query->add_option("text", query_text, "Question text")->required();
    query->add_option("--store", query_store, "Store directory")->required();
    query->add_option("--time", query_time_raw,
                      "Query time (epoch seconds or RFC 3339; default: one day past the newest fragment)");
    query->add_option("--k", query_k, "Top-k evidence budget (default from config: 10)");
    query->add_option("--scope", scope_override, "Override planner scope: short|long|mixed");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Dump index structures as JSON");
    std::string inspect_what, inspect_id, inspect_store;
    inspect->add_option("what", inspect_what, "tree | graph | event")->required();
    inspect->add_option("id", inspect_id, "Event id (for `event`)");
    inspect->add_option("--store", inspect_store, "Store directory")->required();

    // stats
    auto* stats = app.add_subcommand("stats", "Show index counters");
    std::string stats_store;
    stats->add_option("--store", stats_store, "Store directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Run the QA evaluation harness over a dataset");
    std::string eval_dataset, eval_store_root, sweep_spec;
    bool eval_json_only = false;
    eval->add_option("dataset", eval_dataset, "Dataset JSON ({conversations, questions})")->required();
    eval->add_option("--store-root", eval_store_root, "Directory for per-conversation stores")->required();
    eval->add_option("--sweep-k", sweep_spec, "Comma-separated top-k sweep, e.g. 5,10,20,30,50");
    eval->add_flag("--json-only", eval_json_only, "Emit only the JSON report (no table)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const auto cfg = load_config(config_path, mode);
            std::ifstream in(ingest_file);
            if (!in) throw std::runtime_error("cannot open " + ingest_file);
            engram::MemoryEngine engine = std::filesystem::exists(ingest_store + "/manifest.json")
                                              ? engram::MemoryEngine::load(ingest_store, cfg)
                                              : engram::MemoryEngine(cfg);
            const auto report = engine.ingest_jsonl(in);
            engine.save(ingest_store);
            std::cout << report.to_json().dump(2) << "\n";
            return 0;
        }
        if (*query) {
            const auto cfg = load_config(config_path, mode);
            auto engine = open_store(query_store, cfg);
            engram::UnixSeconds t;
            if (query_time_raw.empty()) {
                t = engine.store().max_fragment_ts().value_or(0) + 86400;
            } else {
                const auto parsed = engram::parse_timestamp(query_time_raw);
                if (!parsed) throw std::runtime_error("malformed --time value: " + query_time_raw);
                t = *parsed;
            }
            std::optional<int> k;
            if (query_k > 0) k = query_k;
            std::optional<engram::MemoryScope> scope;
            if (!scope_override.empty()) {
                std::string upper = scope_override;
                for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                scope = engram::memory_scope_from_name(upper);
                if (!scope) throw std::runtime_error("--scope must be short, long, or mixed");
            }
            const auto result = engine.query(query_text, t, k, scope);
            std::cout << result.to_json().dump(2) << "\n";
            return 0;
        }
        if (*inspect) {
            const auto cfg = load_config(config_path, mode);
            auto engine = open_store(inspect_store, cfg);
            if (inspect_what == "tree") {
                std::cout << engine.tree().dump().dump(2) << "\n";
            } else if (inspect_what == "graph") {
                std::cout << engine.graph().dump().dump(2) << "\n";
            } else if (inspect_what == "event") {
                if (inspect_id.empty()) throw std::runtime_error("inspect event requires an id");
                const engram::MemoryEvent* ev = engine.store().event(inspect_id);
                if (!ev) throw std::runtime_error("no such event: " + inspect_id);
                json j = {
                    {"id", ev->id},
                    {"event_text", ev->event_text},
                    {"frag_ids", ev->frag_ids},
                    {"time_range", {ev->time_range.start, ev->time_range.end}},
                    {"event_type", engram::event_type_name(ev->event_type)},
                    {"participants", ev->participants},
                    {"reinforcement_count", ev->reinforcement_count},
                    {"last_reinforced", ev->last_reinforced},
                };
                std::cout << j.dump(2) << "\n";
            } else {
                throw std::runtime_error("inspect expects tree, graph, or event");
            }
            return 0;
        }
        if (*stats) {
            const auto cfg = load_config(config_path, mode);
            auto engine = open_store(stats_store, cfg);
            const auto s = engram::live_stats(engine.store(), engine.tree(), engine.graph());
            std::cout << s.to_table();
            return 0;
        }
        if (*eval) {
            const auto cfg = load_config(config_path, mode);
            const auto dataset = engram::Dataset::load_file(eval_dataset);
            engram::EvalOptions opts;
            opts.store_root = eval_store_root;
            if (!sweep_spec.empty()) opts.sweep_k = parse_k_list(sweep_spec);
            const auto report = engram::run_eval(dataset, cfg, opts);
            std::cout << report.to_json().dump(2) << "\n";
            if (!eval_json_only) std::cout << report.to_table();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
