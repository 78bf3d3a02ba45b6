#pragma once
#include <memory>

#include "engram/providers.hpp"

namespace engram {

// OpenAI-compatible wire protocol: POST {endpoint}/chat/completions and
// {endpoint}/embeddings, bearer token from the configured environment
// variable. Transient failures (connect errors, 429, 5xx) retry with
// exponential backoff; every attempt lands in the ledger's call_count.
class HttpChatProvider : public ChatProvider {
public:
    HttpChatProvider(ProviderConfig cfg, CostLedger& ledger, std::shared_ptr<CallGate> gate);

    ChatResponse chat(const ChatRequest& req, CostStage stage) override;

private:
    ProviderConfig cfg_;
    CostLedger& ledger_;
    std::shared_ptr<CallGate> gate_;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(ProviderConfig cfg, int expected_dim, CostLedger& ledger,
                          std::shared_ptr<CallGate> gate);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, CostStage stage) override;
    int dim() const override { return expected_dim_; }

private:
    ProviderConfig cfg_;
    int expected_dim_;
    CostLedger& ledger_;
    std::shared_ptr<CallGate> gate_;
};

// POST {endpoint}/rerank with {model, query, documents}; expects
// {results:[{index, relevance_score}]}. Configured only when a rerank model
// is named; otherwise the pass-through reranker is used.
class HttpReranker : public Reranker {
public:
    HttpReranker(ProviderConfig cfg, CostLedger& ledger, std::shared_ptr<CallGate> gate);

    std::vector<RerankEntry> rerank(const std::string& query, const std::vector<std::string>& candidates,
                                    CostStage stage) override;

private:
    ProviderConfig cfg_;
    CostLedger& ledger_;
    std::shared_ptr<CallGate> gate_;
};

}  // namespace engram
