#include "engram/evaluation.hpp"

#include <map>

#include "json.hpp"

#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

std::vector<std::string> normalize(const std::string& input) {
    const std::string folded = text::fold_to_ascii(input);
    std::string stripped;
    stripped.reserve(folded.size());
    for (char c : folded) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || std::isspace(u)) {
            stripped.push_back(static_cast<char>(std::tolower(u)));
        }
        // Punctuation is removed outright, not turned into a separator.
    }
    std::vector<std::string> tokens;
    for (auto& tok : text::split_ws(stripped)) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

F1Result token_f1(const std::string& pred, const std::string& gold) {
    const auto pred_tokens = normalize(pred);
    const auto gold_tokens = normalize(gold);
    std::map<std::string, std::int64_t> gold_counts;
    for (const auto& t : gold_tokens) ++gold_counts[t];
    std::int64_t overlap = 0;
    for (const auto& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    F1Result r;
    r.precision = pred_tokens.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    r.recall = gold_tokens.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    r.f1 = (r.precision + r.recall) == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

JudgeOutcome judge(ChatProvider& chat, const PromptCatalog& prompts, CostLedger& ledger,
                   const std::string& question, const std::string& gold, const std::string& predicted) {
    (void)ledger;  // provider records its own costs
    ChatRequest req;
    req.user_payload = substitute_slots(prompts.judge, {{"question", question},
                                                        {"gold_answer", gold},
                                                        {"generated_answer", predicted}});
    req.json_mode = true;
    JudgeOutcome outcome;
    try {
        const ChatResponse resp = chat.chat(req, CostStage::judge);
        const json parsed = json::parse(resp.text);
        const std::string label = parsed.value("label", "");
        if (label == "CORRECT") outcome.label = JudgeLabel::CORRECT;
        else if (label == "WRONG") outcome.label = JudgeLabel::WRONG;
        else outcome.parse_failed = true;
    } catch (const ProviderError&) {
        // Unparsable after the provider's re-ask: WRONG, flagged separately
        // so accuracy is never silently inflated.
        outcome.label = JudgeLabel::WRONG;
        outcome.parse_failed = true;
    }
    if (outcome.parse_failed) outcome.label = JudgeLabel::WRONG;
    return outcome;
}

SimplifyOutcome simplify_answer(ChatProvider& chat, const PromptCatalog& prompts, CostLedger& ledger,
                                const std::string& question, const std::string& generated) {
    (void)ledger;
    ChatRequest req;
    req.user_payload = substitute_slots(prompts.simplifier, {{"question", question}, {"answer", generated}});
    req.json_mode = true;
    SimplifyOutcome outcome;
    try {
        const ChatResponse resp = chat.chat(req, CostStage::judge);
        const json parsed = json::parse(resp.text);
        if (parsed.contains("answer") && parsed.at("answer").is_string()) {
            outcome.answer = parsed.at("answer").get<std::string>();
            return outcome;
        }
    } catch (const ProviderError&) {
    }
    outcome.answer = generated;  // pass through unchanged
    outcome.passthrough = true;
    return outcome;
}

}  // namespace engram
