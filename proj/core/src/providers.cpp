#include "engram/providers.hpp"

#include "engram/http_provider.hpp"
#include "engram/mock_provider.hpp"

namespace engram {

std::int64_t approx_tokens(std::string_view text) {
    std::int64_t count = 0;
    bool in_token = false;
    for (char c : text) {
        const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

ProviderSet make_providers(const EngineConfig& cfg, CostLedger& ledger) {
    cfg.provider.validate();
    ProviderSet set;
    set.gate = std::make_shared<CallGate>(cfg.provider.parallelism);
    if (cfg.provider.mode == ProviderMode::mock) {
        auto embed = std::make_shared<MockEmbeddingProvider>(cfg.embedding_dim, cfg.provider.mock_seed,
                                                             ledger, set.gate);
        set.embeddings = embed;
        set.chat = std::make_shared<MockChatProvider>(ledger, set.gate);
        set.reranker = std::make_shared<PassthroughReranker>(*embed, ledger);
    } else {
        auto embed = std::make_shared<HttpEmbeddingProvider>(cfg.provider, cfg.embedding_dim, ledger, set.gate);
        set.embeddings = embed;
        set.chat = std::make_shared<HttpChatProvider>(cfg.provider, ledger, set.gate);
        if (cfg.provider.rerank_model.empty()) {
            set.reranker = std::make_shared<PassthroughReranker>(*embed, ledger);
        } else {
            set.reranker = std::make_shared<HttpReranker>(cfg.provider, ledger, set.gate);
        }
    }
    return set;
}

}  // namespace engram
