#pragma once
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "engram/time.hpp"

namespace engram::rules {

// Deterministic rule-driven stand-ins for every chat task. They power the
// offline mock provider and the degraded fallbacks, producing the same JSON
// shapes the live prompts demand. Pure functions of their inputs.

// {fragment:{id,text,timestamp,speaker}, neighbors:[...]} ->
// {"events":[{event_text, frag_ids, time_range, event_type}...]}
// One event per sentence, type "fact".
nlohmann::json extract_events(const nlohmann::json& input);

// {fragment:{id,text,...}} -> {"entities":[...], "relations":[...]}
// Capitalized multi-character token runs become entities of type "other";
// sentence co-occurrence becomes a "related_to" relation at confidence 0.5.
nlohmann::json extract_entities(const nlohmann::json& input);

// {children:[{id,text,time_range:[s,e]}...]} ->
// {"consolidated_events":[...], "unmerged_event_ids":[...]}
// Children arrive as one cluster and merge into one consolidated event when
// there are at least two; texts that agree except for a trailing token are
// recorded as conflicts.
nlohmann::json consolidate(const nlohmann::json& input);

// Planner: splits "X and Y" between distinct capitalized names into two
// subqueries, forces coverage_mode=global on counting/list intents, parses
// explicit dates and relative cues into hint_time, defaults scope SHORT.
nlohmann::json plan(const std::string& query, UnixSeconds query_time);

// {subquery, evidence:[{id,text}...], dependency_answers:{qid:text}} ->
// {"answer","missing_info"}. missing_info triggers when the evidence covers
// less than 60% of the subquery's content tokens.
nlohmann::json reason(const nlohmann::json& input);

// {query, subquery, evidence:[...], reason_output:{...}} ->
// {"missing_info_query": "..."} anchored on evidence-only tokens.
nlohmann::json missing_info_query(const nlohmann::json& input);

// {query, sub_answers:[{id,answer,missing_info}...]} -> {"answer": "..."}
// K=1 passes through byte-identically; otherwise the common content tokens
// of the sub-answers (minus the query's own tokens) form the answer.
nlohmann::json synthesize(const nlohmann::json& input);

// -> {"label": "CORRECT"|"WRONG"}; date surface forms compare equal, gold
// token containment or token-F1 >= 0.6 counts as correct.
nlohmann::json judge(const std::string& question, const std::string& gold, const std::string& generated);

// -> {"answer": "..."}; keeps the longest capitalized run absent from the
// question, else returns the answer unchanged.
nlohmann::json simplify(const std::string& question, const std::string& answer);

// Shared helpers (exposed for tests).

// Maximal runs of capitalized multi-character non-stopword tokens.
std::vector<std::string> capitalized_runs(std::string_view s);

// Lowercased non-stopword word tokens.
std::vector<std::string> content_tokens(std::string_view s);

// Fraction of `question`'s content tokens found in `evidence` under light
// stemming; 1.0 when the question has no content tokens.
double token_coverage(std::string_view question, const std::vector<std::string>& evidence_texts);

struct ParsedDate {
    int month = 0;
    int day = 0;
    std::optional<int> year;
    bool operator==(const ParsedDate&) const = default;
};

// Recognizes ISO dates, "May 7th", "7 May", "May 7, 2023" style surfaces.
std::optional<ParsedDate> parse_date_surface(std::string_view s);

// First date surface found anywhere in the text.
std::optional<ParsedDate> find_date(std::string_view s);

// Absolute dates and relative cues ("yesterday", "last week", "last month")
// resolved against `reference` into a calendar window.
std::optional<TimeInterval> parse_time_hint(std::string_view query, UnixSeconds reference);

}  // namespace engram::rules
