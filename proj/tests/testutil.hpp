#pragma once
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "engram/engine.hpp"
#include "engram/evalrunner.hpp"
#include "engram/mock_provider.hpp"
#include "engram/providers.hpp"

namespace engram::testutil {

// Mock-mode config with the default schedule and weights.
EngineConfig mock_config(int embedding_dim = 256);

// A chat provider driven by a fixed script of outcomes, for failure-path
// tests. Each entry is either a literal reply or a thrown error.
class ScriptedChatProvider : public ChatProvider {
public:
    struct Step {
        enum class Kind { reply, transport_error, garbage } kind = Kind::reply;
        std::string text;
    };

    explicit ScriptedChatProvider(std::vector<Step> steps, CostLedger& ledger)
        : steps_(std::move(steps)), ledger_(ledger) {}

    ChatResponse chat(const ChatRequest& req, CostStage stage) override;

    int calls = 0;

private:
    std::vector<Step> steps_;
    CostLedger& ledger_;
};

// The three-session conversation used by end-to-end and determinism tests.
std::vector<nlohmann::json> three_session_records();

// The bridge-evidence conversation: first-pass retrieval sees only the vague
// piano/movie-theme evidence, the follow-up uncovers the composer.
std::vector<nlohmann::json> bridge_records();

// 200 single-claim fragments over three simulated months, eight topic
// clusters, unique detail tokens so nothing deduplicates.
std::vector<nlohmann::json> tree_corpus_records();

// Dataset wrapping the three-session and bridge conversations with graded
// questions.
Dataset mock_dataset();

// Builds a mock engine and ingests records.
std::unique_ptr<MemoryEngine> build_engine(const std::vector<nlohmann::json>& records,
                                           EngineConfig cfg = mock_config());

std::string ingest_lines(const std::vector<nlohmann::json>& records);

// Scratch directory under the system temp root, wiped on construction.
class TempDir {
public:
    explicit TempDir(const std::string& label);
    ~TempDir();
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace engram::testutil
