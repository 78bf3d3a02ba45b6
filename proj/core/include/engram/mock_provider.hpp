#pragma once
#include <memory>

#include "engram/providers.hpp"

namespace engram {

// Seeded lexical-hash embeddings: lowercased token unigrams and bigrams are
// hashed into the target dimension with a sign bit, then unit-normalized.
// Pure function of (text, seed, dim); byte-identical across runs.
class MockEmbeddingProvider : public EmbeddingProvider {
public:
    MockEmbeddingProvider(int dim, std::uint64_t seed, CostLedger& ledger, std::shared_ptr<CallGate> gate);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts, CostStage stage) override;
    int dim() const override { return dim_; }

    // The embedding function without ledger traffic, for oracle use in tests.
    EmbeddingVector embed_one(const std::string& text) const;

private:
    int dim_;
    std::uint64_t seed_;
    CostLedger& ledger_;
    std::shared_ptr<CallGate> gate_;
};

// Dispatches on the prompt template markers and answers with the
// deterministic rule engine. Records zero wall time so mock-mode reports
// stay byte-identical.
class MockChatProvider : public ChatProvider {
public:
    MockChatProvider(CostLedger& ledger, std::shared_ptr<CallGate> gate);

    ChatResponse chat(const ChatRequest& req, CostStage stage) override;

private:
    CostLedger& ledger_;
    std::shared_ptr<CallGate> gate_;
};

// Scores each candidate by embedding cosine against the query; order of
// equal scores is preserved.
class PassthroughReranker : public Reranker {
public:
    PassthroughReranker(EmbeddingProvider& embeddings, CostLedger& ledger);

    std::vector<RerankEntry> rerank(const std::string& query, const std::vector<std::string>& candidates,
                                    CostStage stage) override;

private:
    EmbeddingProvider& embeddings_;
    CostLedger& ledger_;
};

}  // namespace engram
