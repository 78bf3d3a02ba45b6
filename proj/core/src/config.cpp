#include "engram/config.hpp"

#include <fstream>
#include <stdexcept>

namespace engram {

using nlohmann::json;

void ProviderConfig::validate() const {
    if (timeout_ms <= 0) throw std::invalid_argument("provider.timeout_ms must be > 0");
    if (max_retries < 0) throw std::invalid_argument("provider.max_retries must be >= 0");
    if (parallelism < 1) throw std::invalid_argument("provider.parallelism must be >= 1");
    if (mode == ProviderMode::live) {
        const auto scheme_end = endpoint_url.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("provider.endpoint_url must start with http:// or https://");
        const std::string scheme = endpoint_url.substr(0, scheme_end);
        if (scheme != "http" && scheme != "https")
            throw std::invalid_argument("provider.endpoint_url has unsupported scheme: " + scheme);
        if (endpoint_url.size() <= scheme_end + 3)
            throw std::invalid_argument("provider.endpoint_url is missing a host");
    }
}

LevelSchedule LevelSchedule::defaults() {
    return LevelSchedule{{
        {1, WindowUnit::day, 0.0},
        {2, WindowUnit::week, 0.8},
        {3, WindowUnit::month, 0.7},
        {4, WindowUnit::year, 0.6},
    }};
}

void LevelSchedule::validate() const {
    if (levels.empty()) throw std::invalid_argument("levels: schedule must not be empty");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i].level != static_cast<int>(i) + 1)
            throw std::invalid_argument("levels: level numbers must be 1..L in order");
        if (i > 0) {
            if (static_cast<int>(levels[i].unit) <= static_cast<int>(levels[i - 1].unit))
                throw std::invalid_argument("levels: window units must strictly coarsen");
            if (levels[i].alpha < 0.0 || levels[i].alpha > 1.0)
                throw std::invalid_argument("levels: alpha must be in [0,1]");
            if (i > 1 && levels[i].alpha > levels[i - 1].alpha)
                throw std::invalid_argument("levels: alpha must be non-increasing with level");
        }
    }
}

void EngineConfig::validate() const {
    if (embedding_dim <= 0) throw std::invalid_argument("embedding_dim must be positive");
    provider.validate();
    levels.validate();
    scoring.validate();
    if (graph.jaccard_threshold < 0.0 || graph.jaccard_threshold > 1.0)
        throw std::invalid_argument("graph.jaccard_threshold must be in [0,1]");
    if (graph.edit_similarity_threshold < 0.0 || graph.edit_similarity_threshold > 1.0)
        throw std::invalid_argument("graph.edit_similarity_threshold must be in [0,1]");
    if (retrieval.top_k < 1) throw std::invalid_argument("retrieval.top_k must be >= 1");
    if (retrieval.hops < 0) throw std::invalid_argument("retrieval.hops must be >= 0");
    if (retrieval.fanout < 1) throw std::invalid_argument("retrieval.fanout must be >= 1");
}

json EngineConfig::to_json() const {
    json j;
    j["embedding_dim"] = embedding_dim;
    j["provider"] = {
        {"mode", provider.mode == ProviderMode::mock ? "mock" : "live"},
        {"endpoint_url", provider.endpoint_url},
        {"api_key_env_var", provider.api_key_env_var},
        {"chat_model", provider.chat_model},
        {"embed_model", provider.embed_model},
        {"rerank_model", provider.rerank_model},
        {"rerank_endpoint_url", provider.rerank_endpoint_url},
        {"timeout_ms", provider.timeout_ms},
        {"max_retries", provider.max_retries},
        {"temperature", provider.temperature},
        {"parallelism", provider.parallelism},
        {"mock_seed", provider.mock_seed},
        {"retry_backoff_ms", provider.retry_backoff_ms},
    };
    json lv = json::array();
    for (const auto& l : levels.levels)
        lv.push_back({{"level", l.level}, {"unit", window_unit_name(l.unit)}, {"alpha", l.alpha}});
    j["levels"] = lv;
    j["scoring"] = {
        {"theta1", scoring.theta1}, {"theta2", scoring.theta2}, {"theta3", scoring.theta3},
        {"lambda", scoring.lambda}, {"epsilon", scoring.epsilon},
        {"tau_seconds", scoring.tau_seconds}, {"eta", scoring.eta},
        {"w_sem", scoring.w_sem}, {"w_time", scoring.w_time}, {"w_mem", scoring.w_mem},
    };
    j["graph"] = {
        {"jaccard_threshold", graph.jaccard_threshold},
        {"edit_similarity_threshold", graph.edit_similarity_threshold},
        {"salience_min_links", graph.salience_min_links},
        {"recent_facts_cap", graph.recent_facts_cap},
        {"persistent_fact_min_reinforcement", graph.persistent_fact_min_reinforcement},
    };
    j["retrieval"] = {
        {"top_k", retrieval.top_k},
        {"hops", retrieval.hops},
        {"fanout", retrieval.fanout},
        {"neighbor_window", retrieval.neighbor_window},
        {"seed_top_n", retrieval.seed_top_n},
        {"seed_min_cosine", retrieval.seed_min_cosine},
        {"adjacent_window_candidates", retrieval.adjacent_window_candidates},
        {"summary_debounce_growth", retrieval.summary_debounce_growth},
    };
    j["prompts_path"] = prompts_path;
    return j;
}

EngineConfig EngineConfig::from_json(const json& j) {
    EngineConfig cfg;
    cfg.embedding_dim = j.value("embedding_dim", cfg.embedding_dim);
    if (j.contains("provider")) {
        const auto& p = j.at("provider");
        const std::string mode = p.value("mode", "mock");
        if (mode == "mock") cfg.provider.mode = ProviderMode::mock;
        else if (mode == "live") cfg.provider.mode = ProviderMode::live;
        else throw std::invalid_argument("provider.mode must be mock or live");
        cfg.provider.endpoint_url = p.value("endpoint_url", cfg.provider.endpoint_url);
        cfg.provider.api_key_env_var = p.value("api_key_env_var", cfg.provider.api_key_env_var);
        cfg.provider.chat_model = p.value("chat_model", cfg.provider.chat_model);
        cfg.provider.embed_model = p.value("embed_model", cfg.provider.embed_model);
        cfg.provider.rerank_model = p.value("rerank_model", cfg.provider.rerank_model);
        cfg.provider.rerank_endpoint_url = p.value("rerank_endpoint_url", cfg.provider.rerank_endpoint_url);
        cfg.provider.timeout_ms = p.value("timeout_ms", cfg.provider.timeout_ms);
        cfg.provider.max_retries = p.value("max_retries", cfg.provider.max_retries);
        cfg.provider.temperature = p.value("temperature", cfg.provider.temperature);
        cfg.provider.parallelism = p.value("parallelism", cfg.provider.parallelism);
        cfg.provider.mock_seed = p.value("mock_seed", cfg.provider.mock_seed);
        cfg.provider.retry_backoff_ms = p.value("retry_backoff_ms", cfg.provider.retry_backoff_ms);
    }
    if (j.contains("levels")) {
        cfg.levels.levels.clear();
        for (const auto& l : j.at("levels")) {
            LevelConfig lc;
            lc.level = l.at("level").get<int>();
            const auto unit = window_unit_from_name(l.at("unit").get<std::string>());
            if (!unit) throw std::invalid_argument("levels: unknown window unit");
            lc.unit = *unit;
            lc.alpha = l.value("alpha", 0.0);
            cfg.levels.levels.push_back(lc);
        }
    }
    if (j.contains("scoring")) {
        const auto& s = j.at("scoring");
        cfg.scoring.theta1 = s.value("theta1", cfg.scoring.theta1);
        cfg.scoring.theta2 = s.value("theta2", cfg.scoring.theta2);
        cfg.scoring.theta3 = s.value("theta3", cfg.scoring.theta3);
        cfg.scoring.lambda = s.value("lambda", cfg.scoring.lambda);
        cfg.scoring.epsilon = s.value("epsilon", cfg.scoring.epsilon);
        if (s.contains("tau_days")) cfg.scoring.tau_seconds = s.at("tau_days").get<double>() * 86400.0;
        cfg.scoring.tau_seconds = s.value("tau_seconds", cfg.scoring.tau_seconds);
        cfg.scoring.eta = s.value("eta", cfg.scoring.eta);
        cfg.scoring.w_sem = s.value("w_sem", cfg.scoring.w_sem);
        cfg.scoring.w_time = s.value("w_time", cfg.scoring.w_time);
        cfg.scoring.w_mem = s.value("w_mem", cfg.scoring.w_mem);
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        cfg.graph.jaccard_threshold = g.value("jaccard_threshold", cfg.graph.jaccard_threshold);
        cfg.graph.edit_similarity_threshold =
            g.value("edit_similarity_threshold", cfg.graph.edit_similarity_threshold);
        cfg.graph.salience_min_links = g.value("salience_min_links", cfg.graph.salience_min_links);
        cfg.graph.recent_facts_cap = g.value("recent_facts_cap", cfg.graph.recent_facts_cap);
        cfg.graph.persistent_fact_min_reinforcement =
            g.value("persistent_fact_min_reinforcement", cfg.graph.persistent_fact_min_reinforcement);
    }
    if (j.contains("retrieval")) {
        const auto& r = j.at("retrieval");
        cfg.retrieval.top_k = r.value("top_k", cfg.retrieval.top_k);
        cfg.retrieval.hops = r.value("hops", cfg.retrieval.hops);
        cfg.retrieval.fanout = r.value("fanout", cfg.retrieval.fanout);
        cfg.retrieval.neighbor_window = r.value("neighbor_window", cfg.retrieval.neighbor_window);
        cfg.retrieval.seed_top_n = r.value("seed_top_n", cfg.retrieval.seed_top_n);
        cfg.retrieval.seed_min_cosine = r.value("seed_min_cosine", cfg.retrieval.seed_min_cosine);
        cfg.retrieval.adjacent_window_candidates =
            r.value("adjacent_window_candidates", cfg.retrieval.adjacent_window_candidates);
        cfg.retrieval.summary_debounce_growth =
            r.value("summary_debounce_growth", cfg.retrieval.summary_debounce_growth);
    }
    cfg.prompts_path = j.value("prompts_path", cfg.prompts_path);
    cfg.validate();
    return cfg;
}

EngineConfig EngineConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);
    return from_json(j);
}

std::string EngineConfig::content_hash() const {
    const std::string dump = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace engram
