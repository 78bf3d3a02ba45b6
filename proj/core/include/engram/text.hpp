#pragma once
#include <string>
#include <string_view>
#include <vector>

namespace engram::text {

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_ws(std::string_view s);

// Compatibility folding: common Latin-1 Supplement / Latin Extended-A
// letters are decomposed to their ASCII base letter; other code points pass
// through unchanged. Idempotent.
std::string fold_to_ascii(std::string_view s);

// Whitespace-separated words, original casing preserved.
std::vector<std::string> split_ws(std::string_view s);

// Naive sentence split on . ! ? — good enough for rule-driven extraction.
std::vector<std::string> split_sentences(std::string_view s);

// Lowercased alphanumeric word tokens (punctuation acts as a separator).
std::vector<std::string> word_tokens(std::string_view s);

bool is_stopword(std::string_view lowercase_token);

// Lowercase, punctuation to space, whitespace collapse. Used for entity
// names and lexical matching, not for answer evaluation.
std::string normalize_name(std::string_view s);
std::vector<std::string> name_tokens(std::string_view s);

// Drops leading honorific tokens (dr, mr, mrs, ms, miss, prof, sir, madam).
std::vector<std::string> strip_titles(std::vector<std::string> tokens);

double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// 1 - levenshtein(a, b) / max(len). Empty vs empty is 1.0.
double edit_similarity(std::string_view a, std::string_view b);

// Trailing-'s' stripper for loose token matching in rule-driven components.
std::string light_stem(std::string_view token);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace engram::text
