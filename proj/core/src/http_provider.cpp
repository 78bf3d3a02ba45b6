#include "engram/http_provider.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace engram {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path_prefix;
};

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigurationError("endpoint URL must start with http:// or https://: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw ConfigurationError("endpoint URL has unsupported scheme: " + url);
    const std::size_t host_start = scheme_end + 3;
    if (host_start >= url.size()) throw ConfigurationError("endpoint URL is missing a host: " + url);
    const std::size_t path_start = url.find('/', host_start);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.base = url;
    } else {
        ep.base = url.substr(0, path_start);
        ep.path_prefix = url.substr(path_start);
        while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
    }
    return ep;
}

httplib::Headers auth_headers(const ProviderConfig& cfg) {
    httplib::Headers headers;
    if (!cfg.api_key_env_var.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env_var.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

// POSTs with retries on transport errors and transient statuses. Returns the
// response body; `attempts` accumulates every request made.
std::string post_with_retries(const ProviderConfig& cfg, const std::string& path, const std::string& body,
                              int& attempts) {
    const Endpoint ep = parse_endpoint(cfg.endpoint_url);
    httplib::Client client(ep.base);
    client.set_connection_timeout(0, static_cast<time_t>(cfg.timeout_ms) * 1000);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    client.set_write_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    const auto headers = auth_headers(cfg);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<std::int64_t>(cfg.retry_backoff_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        ++attempts;
        auto res = client.Post(ep.path_prefix + path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        if (transient_status(res->status)) {
            last_error = "status " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        throw TransportError("request to " + path + " failed with status " + std::to_string(res->status) +
                             ": " + res->body);
    }
    throw TransportError("request to " + path + " failed after " + std::to_string(attempts) +
                         " attempts; last error: " + last_error);
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig cfg, CostLedger& ledger, std::shared_ptr<CallGate> gate)
    : cfg_(std::move(cfg)), ledger_(ledger), gate_(std::move(gate)) {
    parse_endpoint(cfg_.endpoint_url);  // configuration errors surface before any call
}

ChatResponse HttpChatProvider::chat(const ChatRequest& req, CostStage stage) {
    CallGate::Pass pass(*gate_);
    json messages = json::array();
    if (!req.system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", req.user_payload}});
    json body = {
        {"model", cfg_.chat_model},
        {"messages", messages},
        {"temperature", cfg_.temperature},
    };
    if (req.json_mode) body["response_format"] = {{"type", "json_object"}};

    const auto start = std::chrono::steady_clock::now();
    int attempts = 0;
    ChatResponse resp;
    std::string raw_on_failure;
    bool parsed_ok = false;
    // One re-ask on a json_mode parse failure, then a structured-output error.
    for (int ask = 0; ask < (req.json_mode ? 2 : 1); ++ask) {
        const std::string response_body = post_with_retries(cfg_, "/chat/completions", body.dump(), attempts);
        json parsed = json::parse(response_body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty())
            throw TransportError("malformed chat completion response: " + response_body.substr(0, 512));
        resp.text = parsed["choices"][0]["message"].value("content", "");
        if (parsed.contains("usage")) {
            resp.prompt_tokens += parsed["usage"].value("prompt_tokens", 0);
            resp.completion_tokens += parsed["usage"].value("completion_tokens", 0);
        }
        if (!req.json_mode) { parsed_ok = true; break; }
        json content = json::parse(resp.text, nullptr, false);
        if (!content.is_discarded()) { parsed_ok = true; break; }
        raw_on_failure = resp.text;
    }
    ledger_.add({stage, resp.prompt_tokens, resp.completion_tokens, elapsed_ms(start), attempts});
    if (!parsed_ok)
        throw StructuredOutputError("chat response is not valid JSON after re-ask", raw_on_failure);
    return resp;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderConfig cfg, int expected_dim, CostLedger& ledger,
                                             std::shared_ptr<CallGate> gate)
    : cfg_(std::move(cfg)), expected_dim_(expected_dim), ledger_(ledger), gate_(std::move(gate)) {
    parse_endpoint(cfg_.endpoint_url);
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                                          CostStage stage) {
    if (texts.empty()) throw ProviderError("embed: empty input batch");
    for (const auto& t : texts)
        if (t.empty()) throw ProviderError("embed: empty input text");
    CallGate::Pass pass(*gate_);
    json body = {{"model", cfg_.embed_model}, {"input", texts}};

    const auto start = std::chrono::steady_clock::now();
    int attempts = 0;
    const std::string response_body = post_with_retries(cfg_, "/embeddings", body.dump(), attempts);
    json parsed = json::parse(response_body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("data"))
        throw TransportError("malformed embeddings response: " + response_body.substr(0, 512));

    std::vector<EmbeddingVector> out(texts.size());
    for (const auto& item : parsed["data"]) {
        const std::size_t idx = item.value("index", 0);
        if (idx >= out.size()) throw TransportError("embeddings response index out of range");
        auto values = item.at("embedding").get<std::vector<float>>();
        if (expected_dim_ != 0 && static_cast<int>(values.size()) != expected_dim_)
            throw ProviderError("embedding dimension drift: expected " + std::to_string(expected_dim_) +
                                ", got " + std::to_string(values.size()));
        out[idx] = EmbeddingVector::normalized(std::move(values));
    }
    for (const auto& v : out)
        if (v.empty()) throw TransportError("embeddings response is missing rows");

    std::int64_t prompt_tokens = 0;
    if (parsed.contains("usage")) prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
    ledger_.add({stage, prompt_tokens, 0, elapsed_ms(start), attempts});
    return out;
}

HttpReranker::HttpReranker(ProviderConfig cfg, CostLedger& ledger, std::shared_ptr<CallGate> gate)
    : cfg_(std::move(cfg)), ledger_(ledger), gate_(std::move(gate)) {
    if (!cfg_.rerank_endpoint_url.empty()) cfg_.endpoint_url = cfg_.rerank_endpoint_url;
    parse_endpoint(cfg_.endpoint_url);
}

std::vector<RerankEntry> HttpReranker::rerank(const std::string& query,
                                              const std::vector<std::string>& candidates, CostStage stage) {
    if (candidates.empty()) throw ProviderError("rerank: empty candidate list");
    CallGate::Pass pass(*gate_);
    json body = {{"model", cfg_.rerank_model}, {"query", query}, {"documents", candidates}};

    const auto start = std::chrono::steady_clock::now();
    int attempts = 0;
    const std::string response_body = post_with_retries(cfg_, "/rerank", body.dump(), attempts);
    json parsed = json::parse(response_body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("results"))
        throw TransportError("malformed rerank response: " + response_body.substr(0, 512));

    std::vector<RerankEntry> out;
    for (const auto& r : parsed["results"])
        out.push_back({r.value("index", 0), r.value("relevance_score", 0.0)});
    std::stable_sort(out.begin(), out.end(),
                     [](const RerankEntry& a, const RerankEntry& b) { return a.score > b.score; });

    std::int64_t prompt_tokens = 0;
    if (parsed.contains("usage")) prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
    ledger_.add({stage, prompt_tokens, 0, elapsed_ms(start), attempts});
    return out;
}

}  // namespace engram
