#include "engram/mock_provider.hpp"

#include <algorithm>

#include "json.hpp"

#include "engram/rules.hpp"
#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

namespace {

std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Line-oriented slot recovery from a substituted template.
std::string line_value(const std::string& text, const std::string& prefix) {
    std::size_t pos = 0;
    std::string found;
    while ((pos = text.find(prefix, pos)) != std::string::npos) {
        if (pos == 0 || text[pos - 1] == '\n') {
            const std::size_t eol = text.find('\n', pos);
            found = text.substr(pos + prefix.size(),
                                (eol == std::string::npos ? text.size() : eol) - pos - prefix.size());
        }
        pos += prefix.size();
    }
    return found;
}

std::optional<json> input_json(const std::string& payload) {
    static const std::string marker = "Input JSON:\n";
    const std::size_t pos = payload.rfind(marker);
    if (pos == std::string::npos) return std::nullopt;
    json parsed = json::parse(payload.substr(pos + marker.size()), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

}  // namespace

MockEmbeddingProvider::MockEmbeddingProvider(int dim, std::uint64_t seed, CostLedger& ledger,
                                             std::shared_ptr<CallGate> gate)
    : dim_(dim), seed_(seed), ledger_(ledger), gate_(std::move(gate)) {}

EmbeddingVector MockEmbeddingProvider::embed_one(const std::string& text) const {
    std::vector<float> acc(static_cast<std::size_t>(dim_), 0.0f);
    const auto tokens = text::word_tokens(text);
    auto bump = [&](std::string_view gram, float weight) {
        const std::uint64_t h = fnv1a64(gram, seed_ ^ 1469598103934665603ULL);
        const std::size_t idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_));
        const float sign = (h >> 63) ? -1.0f : 1.0f;
        acc[idx] += sign * weight;
    };
    for (const auto& t : tokens) bump(t, 1.0f);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) bump(tokens[i] + "_" + tokens[i + 1], 0.5f);
    if (std::all_of(acc.begin(), acc.end(), [](float v) { return v == 0.0f; })) acc[0] = 1.0f;
    return EmbeddingVector::normalized(std::move(acc));
}

std::vector<EmbeddingVector> MockEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                                          CostStage stage) {
    if (texts.empty()) throw ProviderError("embed: empty input batch");
    CallGate::Pass pass(*gate_);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::int64_t tokens = 0;
    for (const auto& t : texts) {
        if (t.empty()) throw ProviderError("embed: empty input text");
        out.push_back(embed_one(t));
        tokens += approx_tokens(t);
    }
    ledger_.add({stage, tokens, 0, 0, 1});
    return out;
}

MockChatProvider::MockChatProvider(CostLedger& ledger, std::shared_ptr<CallGate> gate)
    : ledger_(ledger), gate_(std::move(gate)) {}

ChatResponse MockChatProvider::chat(const ChatRequest& req, CostStage stage) {
    CallGate::Pass pass(*gate_);
    const std::string all = req.system_prompt + "\n" + req.user_payload;
    json reply;

    if (all.find("information extraction engine") != std::string::npos) {
        if (auto in = input_json(all)) reply = rules::extract_events(*in);
        else reply = json{{"events", json::array()}};
    } else if (all.find("entity and relation extraction engine") != std::string::npos) {
        if (auto in = input_json(all)) reply = rules::extract_entities(*in);
        else reply = json{{"entities", json::array()}, {"relations", json::array()}};
    } else if (all.find("memory consolidation engine") != std::string::npos) {
        if (auto in = input_json(all)) reply = rules::consolidate(*in);
        else reply = json{{"consolidated_events", json::array()}, {"unmerged_event_ids", json::array()}};
    } else if (all.find("label an answer to a question") != std::string::npos) {
        reply = rules::judge(line_value(all, "Question: "), line_value(all, "Gold answer: "),
                             line_value(all, "Generated answer: "));
    } else if (all.find("answer simplifier") != std::string::npos) {
        reply = rules::simplify(line_value(all, "Question: "), line_value(all, "Generated Answer: "));
    } else if (all.find("decompose the user's query") != std::string::npos) {
        static const std::string marker = "User query:\n";
        const std::size_t pos = all.rfind(marker);
        std::string query = pos == std::string::npos ? "" : all.substr(pos + marker.size());
        UnixSeconds t = 0;
        static const std::string tmark = "\nQuery time: ";
        const std::size_t tpos = query.rfind(tmark);
        if (tpos != std::string::npos) {
            t = std::strtoll(query.c_str() + tpos + tmark.size(), nullptr, 10);
            query = query.substr(0, tpos);
        }
        query = text::trim(query);
        reply = rules::plan(query, t);
    } else if (all.find("generating ONE actionable retrieval query") != std::string::npos) {
        if (auto in = input_json(all)) reply = rules::missing_info_query(*in);
        else reply = json{{"missing_info_query", ""}};
    } else if (all.find("evidence-grounded reasoner") != std::string::npos) {
        if (auto in = input_json(all)) reply = rules::reason(*in);
        else reply = json{{"answer", ""}, {"missing_info", true}};
    } else if (all.find("answer synthesizer") != std::string::npos) {
        if (auto in = input_json(all)) reply = rules::synthesize(*in);
        else reply = json{{"answer", "Insufficient memory evidence."}};
    } else {
        reply = json::object();
    }

    ChatResponse resp;
    resp.text = reply.dump();
    resp.prompt_tokens = approx_tokens(req.system_prompt) + approx_tokens(req.user_payload);
    resp.completion_tokens = approx_tokens(resp.text);
    ledger_.add({stage, resp.prompt_tokens, resp.completion_tokens, 0, 1});
    return resp;
}

PassthroughReranker::PassthroughReranker(EmbeddingProvider& embeddings, CostLedger& ledger)
    : embeddings_(embeddings), ledger_(ledger) {}

std::vector<RerankEntry> PassthroughReranker::rerank(const std::string& query,
                                                     const std::vector<std::string>& candidates,
                                                     CostStage stage) {
    if (candidates.empty()) throw ProviderError("rerank: empty candidate list");
    std::vector<std::string> batch;
    batch.reserve(candidates.size() + 1);
    batch.push_back(query);
    for (const auto& c : candidates) batch.push_back(c);
    const auto vecs = embeddings_.embed(batch, stage);
    std::vector<RerankEntry> out;
    out.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        out.push_back({static_cast<int>(i), cosine(vecs[0], vecs[i + 1])});
    std::stable_sort(out.begin(), out.end(),
                     [](const RerankEntry& a, const RerankEntry& b) { return a.score > b.score; });
    return out;
}

}  // namespace engram
