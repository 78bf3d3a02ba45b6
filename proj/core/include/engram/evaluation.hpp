#pragma once
#include <optional>
#include <string>
#include <vector>

#include "engram/prompts.hpp"
#include "engram/providers.hpp"

namespace engram {

// Canonical-form answer normalization: compatibility folding to ASCII,
// lowercase, punctuation stripped, articles {a, an, the} removed, whitespace
// collapsed, split into tokens. Idempotent.
std::vector<std::string> normalize(const std::string& text);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Multiset token overlap after normalization. Both-zero precision and
// recall yield F1 = 0.
F1Result token_f1(const std::string& pred, const std::string& gold);

enum class JudgeLabel { CORRECT, WRONG };

struct JudgeOutcome {
    JudgeLabel label = JudgeLabel::WRONG;
    bool parse_failed = false;  // unparsable after the re-ask; counted separately
};

// LLM-judge call with strict JSON output. Date surface forms of the same
// date count as correct per the prompt contract.
JudgeOutcome judge(ChatProvider& chat, const PromptCatalog& prompts, CostLedger& ledger,
                   const std::string& question, const std::string& gold, const std::string& predicted);

struct SimplifyOutcome {
    std::string answer;
    bool passthrough = false;  // parse failure: generated text used unchanged
};

// Reduces a generated answer to its minimal core fact. Feeds F1 only; the
// judge always sees the unsimplified answer.
SimplifyOutcome simplify_answer(ChatProvider& chat, const PromptCatalog& prompts, CostLedger& ledger,
                                const std::string& question, const std::string& generated);

}  // namespace engram
