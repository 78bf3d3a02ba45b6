#pragma once
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "engram/config.hpp"
#include "engram/types.hpp"

namespace engram {

struct ChatRequest {
    std::string system_prompt;
    std::string user_payload;
    bool json_mode = false;
};

struct ChatResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

class ProviderError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad endpoint/config detected before any call is made.
class ConfigurationError : public ProviderError {
    using ProviderError::ProviderError;
};

// Transport-level failure that survived the retry budget.
class TransportError : public ProviderError {
    using ProviderError::ProviderError;
};

// json_mode response failed to parse after the single re-ask. Carries the
// raw model text for diagnosis.
class StructuredOutputError : public ProviderError {
public:
    StructuredOutputError(const std::string& what, std::string raw)
        : ProviderError(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse chat(const ChatRequest& req, CostStage stage) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // One unit-normalized vector per input, same order.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, CostStage stage) = 0;
    virtual int dim() const = 0;
};

struct RerankEntry {
    int index = 0;
    double score = 0.0;
};

class Reranker {
public:
    virtual ~Reranker() = default;
    // A permutation of candidate indices with descending scores.
    virtual std::vector<RerankEntry> rerank(const std::string& query, const std::vector<std::string>& candidates,
                                            CostStage stage) = 0;
};

// Caps concurrent in-flight provider calls; shared by all providers built
// from one config.
class CallGate {
public:
    explicit CallGate(int max_in_flight) : sem_(max_in_flight) {}

    class Pass {
    public:
        explicit Pass(CallGate& gate) : gate_(gate) { gate_.sem_.acquire(); }
        ~Pass() { gate_.sem_.release(); }
        Pass(const Pass&) = delete;
        Pass& operator=(const Pass&) = delete;

    private:
        CallGate& gate_;
    };

private:
    std::counting_semaphore<1024> sem_;
};

struct ProviderSet {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<EmbeddingProvider> embeddings;
    std::shared_ptr<Reranker> reranker;
    std::shared_ptr<CallGate> gate;
};

// Builds the provider stack for a config: mock providers for mock mode, the
// OpenAI-compatible HTTP stack for live mode. The reranker defaults to a
// pass-through backed by the embedding provider unless a rerank model is
// configured.
ProviderSet make_providers(const EngineConfig& cfg, CostLedger& ledger);

// Approximate token count used by the mock providers: whitespace tokens.
std::int64_t approx_tokens(std::string_view text);

}  // namespace engram
