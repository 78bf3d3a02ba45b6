#include "engram/rules.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <unordered_set>

#include "engram/evaluation.hpp"
#include "engram/text.hpp"

namespace engram::rules {

using nlohmann::json;

namespace {

// Strips surrounding punctuation and a possessive suffix from a raw word.
std::string trim_word(std::string_view w) {
    std::size_t b = 0, e = w.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(w[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(w[e - 1]))) --e;
    std::string out(w.substr(b, e - b));
    if (out.size() > 2 && (out.ends_with("'s") || out.ends_with("s'"))) out.resize(out.size() - 2);
    return out;
}

bool is_capitalized_token(const std::string& word) {
    if (word.size() < 2) return false;
    if (!std::isupper(static_cast<unsigned char>(word[0]))) return false;
    return !engram::text::is_stopword(engram::text::to_lower_ascii(word));
}

std::vector<std::string> stems_of(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(engram::text::light_stem(t));
    return out;
}

const std::map<std::string, int>& month_names() {
    static const std::map<std::string, int> m = {
        {"january", 1}, {"jan", 1}, {"february", 2}, {"feb", 2}, {"march", 3}, {"mar", 3},
        {"april", 4}, {"apr", 4}, {"may", 5}, {"june", 6}, {"jun", 6}, {"july", 7}, {"jul", 7},
        {"august", 8}, {"aug", 8}, {"september", 9}, {"sep", 9}, {"sept", 9}, {"october", 10},
        {"oct", 10}, {"november", 11}, {"nov", 11}, {"december", 12}, {"dec", 12},
    };
    return m;
}

// "7", "7th", "22nd" -> day number.
std::optional<int> parse_day_token(const std::string& tok) {
    std::size_t digits = 0;
    while (digits < tok.size() && std::isdigit(static_cast<unsigned char>(tok[digits]))) ++digits;
    if (digits == 0 || digits > 2) return std::nullopt;
    const std::string rest = tok.substr(digits);
    if (!rest.empty() && rest != "st" && rest != "nd" && rest != "rd" && rest != "th") return std::nullopt;
    const int d = std::stoi(tok.substr(0, digits));
    if (d < 1 || d > 31) return std::nullopt;
    return d;
}

std::optional<int> parse_year_token(const std::string& tok) {
    if (tok.size() != 4) return std::nullopt;
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    return std::stoi(tok);
}

}  // namespace

std::vector<std::string> capitalized_runs(std::string_view s) {
    std::vector<std::string> runs;
    std::vector<std::string> current;
    for (const auto& raw : engram::text::split_ws(s)) {
        const std::string word = trim_word(raw);
        if (is_capitalized_token(word)) {
            current.push_back(word);
        } else if (!current.empty()) {
            runs.push_back(engram::text::join(current, " "));
            current.clear();
        }
    }
    if (!current.empty()) runs.push_back(engram::text::join(current, " "));
    return runs;
}

std::vector<std::string> content_tokens(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : engram::text::word_tokens(s))
        if (!engram::text::is_stopword(t)) out.push_back(std::move(t));
    return out;
}

double token_coverage(std::string_view question, const std::vector<std::string>& evidence_texts) {
    const auto q = stems_of(content_tokens(question));
    if (q.empty()) return 1.0;
    std::unordered_set<std::string> ev;
    for (const auto& text : evidence_texts)
        for (const auto& t : stems_of(content_tokens(text))) ev.insert(t);
    std::size_t covered = 0;
    std::unordered_set<std::string> seen;
    std::size_t distinct = 0;
    for (const auto& t : q) {
        if (!seen.insert(t).second) continue;
        ++distinct;
        if (ev.count(t)) ++covered;
    }
    return distinct == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(distinct);
}

json extract_events(const json& input) {
    const auto& frag = input.at("fragment");
    const std::string id = frag.value("id", "");
    const std::string text = frag.value("text", "");
    const std::int64_t ts = frag.value("timestamp", static_cast<std::int64_t>(0));
    json events = json::array();
    for (const auto& sentence : engram::text::split_sentences(text)) {
        events.push_back({
            {"event_text", sentence},
            {"frag_ids", {id}},
            {"time_range", {ts, ts}},
            {"event_type", "fact"},
        });
    }
    return json{{"events", events}};
}

json extract_entities(const json& input) {
    const auto& frag = input.at("fragment");
    const std::string text = frag.value("text", "");
    json entities = json::array();
    json relations = json::array();
    std::set<std::string> seen_entities;
    std::set<std::pair<std::string, std::string>> seen_pairs;
    for (const auto& sentence : engram::text::split_sentences(text)) {
        const auto runs = capitalized_runs(sentence);
        for (const auto& run : runs) {
            const std::string key = engram::text::normalize_name(run);
            if (key.empty()) continue;
            if (seen_entities.insert(key).second)
                entities.push_back({{"name", run}, {"type", "other"}, {"salience", 0.5}});
        }
        for (std::size_t i = 0; i < runs.size(); ++i) {
            for (std::size_t j = i + 1; j < runs.size(); ++j) {
                const auto a = engram::text::normalize_name(runs[i]);
                const auto b = engram::text::normalize_name(runs[j]);
                if (a == b) continue;
                if (!seen_pairs.insert({a, b}).second) continue;
                relations.push_back({{"source", runs[i]},
                                     {"target", runs[j]},
                                     {"label", "related_to"},
                                     {"confidence", 0.5}});
            }
        }
    }
    return json{{"entities", entities}, {"relations", relations}};
}

json consolidate(const json& input) {
    struct Child {
        std::string id;
        std::string text;
        std::int64_t start = 0;
        std::int64_t end = 0;
    };
    std::vector<Child> children;
    for (const auto& c : input.at("children")) {
        Child ch;
        ch.id = c.at("id").get<std::string>();
        ch.text = c.value("text", "");
        if (c.contains("time_range") && c.at("time_range").is_array() && c.at("time_range").size() == 2) {
            ch.start = c.at("time_range")[0].get<std::int64_t>();
            ch.end = c.at("time_range")[1].get<std::int64_t>();
        }
        children.push_back(std::move(ch));
    }
    if (children.empty()) return json{{"consolidated_events", json::array()}, {"unmerged_event_ids", json::array()}};
    if (children.size() == 1)
        return json{{"consolidated_events", json::array()}, {"unmerged_event_ids", {children[0].id}}};

    std::stable_sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.id < b.id;
    });

    // Pairwise conflict rule: same token sequence except the trailing token.
    json conflicts = json::array();
    for (std::size_t i = 0; i < children.size(); ++i) {
        for (std::size_t j = i + 1; j < children.size(); ++j) {
            const auto ta = engram::text::word_tokens(children[i].text);
            const auto tb = engram::text::word_tokens(children[j].text);
            if (ta.size() != tb.size() || ta.size() < 2) continue;
            if (ta.back() == tb.back()) continue;
            if (!std::equal(ta.begin(), ta.end() - 1, tb.begin())) continue;
            conflicts.push_back({{"claim_a", children[i].text},
                                 {"claim_b", children[j].text},
                                 {"source_event_ids_a", {children[i].id}},
                                 {"source_event_ids_b", {children[j].id}}});
        }
    }

    std::vector<std::string> texts, ids;
    std::int64_t lo = children.front().start, hi = children.front().end;
    for (const auto& c : children) {
        texts.push_back(c.text);
        ids.push_back(c.id);
        lo = std::min(lo, c.start);
        hi = std::max(hi, c.end);
    }
    json item = {
        {"consolidated_text", engram::text::join(texts, " ")},
        {"memory_kind", "recurring_theme"},
        {"time_range", {lo, hi}},
        {"participants", json::array()},
        {"entity_hints", json::array()},
        {"source_event_ids", ids},
        {"stability", conflicts.empty() ? "stable" : "conflicting"},
        {"invariants", json::array()},
        {"evolution", json::array()},
        {"conflicts", conflicts},
        {"confidence", 0.9},
    };
    return json{{"consolidated_events", {item}}, {"unmerged_event_ids", json::array()}};
}

std::optional<ParsedDate> parse_date_surface(std::string_view s) {
    // ISO form first.
    static const std::regex iso(R"((\d{4})-(\d{2})-(\d{2}))");
    std::cmatch m;
    const std::string str(s);
    if (std::regex_search(str.c_str(), m, iso)) {
        ParsedDate d;
        d.year = std::stoi(m[1].str());
        d.month = std::stoi(m[2].str());
        d.day = std::stoi(m[3].str());
        if (d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= 31) return d;
        return std::nullopt;
    }
    const auto tokens = engram::text::word_tokens(s);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto month_it = month_names().find(tokens[i]);
        if (month_it == month_names().end()) continue;
        ParsedDate d;
        d.month = month_it->second;
        // "<month> <day>[ <year>]"
        if (i + 1 < tokens.size()) {
            if (auto day = parse_day_token(tokens[i + 1])) {
                d.day = *day;
                if (i + 2 < tokens.size())
                    if (auto y = parse_year_token(tokens[i + 2])) d.year = *y;
                return d;
            }
        }
        // "<day> <month>[ <year>]"
        if (i >= 1) {
            if (auto day = parse_day_token(tokens[i - 1])) {
                d.day = *day;
                if (i + 1 < tokens.size())
                    if (auto y = parse_year_token(tokens[i + 1])) d.year = *y;
                return d;
            }
        }
    }
    return std::nullopt;
}

std::optional<ParsedDate> find_date(std::string_view s) { return parse_date_surface(s); }

std::optional<TimeInterval> parse_time_hint(std::string_view query, UnixSeconds reference) {
    const std::string lower = engram::text::to_lower_ascii(query);
    if (lower.find("yesterday") != std::string::npos)
        return window_of(reference - 86400, WindowUnit::day);
    if (lower.find("last week") != std::string::npos)
        return window_of(window_of(reference, WindowUnit::week).start - 86400, WindowUnit::week);
    if (lower.find("last month") != std::string::npos)
        return window_of(window_of(reference, WindowUnit::month).start - 86400, WindowUnit::month);
    if (lower.find("last year") != std::string::npos)
        return window_of(window_of(reference, WindowUnit::year).start - 86400, WindowUnit::year);

    if (auto d = parse_date_surface(query)) {
        if (d->day > 0) {
            const int year = d->year.value_or(civil_from_days(reference / 86400).year);
            const std::int64_t day = days_from_civil(year, static_cast<unsigned>(d->month),
                                                     static_cast<unsigned>(d->day));
            return window_of(day * 86400, WindowUnit::day);
        }
    }
    // "<month name> <year>" without a day.
    const auto tokens = engram::text::word_tokens(query);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const auto it = month_names().find(tokens[i]);
        if (it == month_names().end()) continue;
        if (auto y = parse_year_token(tokens[i + 1])) {
            const std::int64_t day = days_from_civil(*y, static_cast<unsigned>(it->second), 1);
            return window_of(day * 86400, WindowUnit::month);
        }
    }
    return std::nullopt;
}

json plan(const std::string& query, UnixSeconds query_time) {
    static const std::regex counting(
        R"(\b(how many|count|number of|total|times|frequency|rate|list|names of)\b)",
        std::regex::icase);
    const bool global_intent = std::regex_search(query, counting);
    const auto hint = parse_time_hint(query, query_time);

    auto hint_json = [&]() -> json {
        if (!hint) return nullptr;
        return json::array({hint->start, hint->end});
    };

    // Split "X and Y" between two distinct capitalized names.
    static const std::regex pair(R"(([A-Z][A-Za-z]+) and ([A-Z][A-Za-z]+))");
    std::smatch m;
    if (std::regex_search(query, m, pair) && m[1].str() != m[2].str() &&
        is_capitalized_token(m[1].str()) && is_capitalized_token(m[2].str())) {
        auto make_text = [&](const std::string& keep) {
            std::string text = query;
            text.replace(static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0)), keep);
            // Drop a stranded "both".
            static const std::regex both(R"(\s+both\b)");
            text = std::regex_replace(text, both, "");
            return text;
        };
        json subqueries = json::array();
        subqueries.push_back({{"id", "q1"}, {"text", make_text(m[1].str())}, {"memory_scope", "SHORT"},
                              {"coverage_mode", "global"}, {"type_hint", nullptr},
                              {"deps", json::array()}, {"hint_time", hint_json()}});
        subqueries.push_back({{"id", "q2"}, {"text", make_text(m[2].str())}, {"memory_scope", "SHORT"},
                              {"coverage_mode", "global"}, {"type_hint", nullptr},
                              {"deps", json::array()}, {"hint_time", hint_json()}});
        return json{{"subqueries", subqueries},
                    {"dependency_graph", {{"q1", json::array()}, {"q2", json::array()}}}};
    }

    json subqueries = json::array();
    subqueries.push_back({{"id", "q1"}, {"text", query}, {"memory_scope", "SHORT"},
                          {"coverage_mode", global_intent ? "global" : "local"}, {"type_hint", nullptr},
                          {"deps", json::array()}, {"hint_time", hint_json()}});
    return json{{"subqueries", subqueries}, {"dependency_graph", {{"q1", json::array()}}}};
}

json reason(const json& input) {
    const std::string subquery = input.value("subquery", "");
    std::vector<std::string> texts;
    if (input.contains("evidence"))
        for (const auto& e : input.at("evidence")) texts.push_back(e.value("text", ""));
    if (input.contains("dependency_answers"))
        for (const auto& [_, v] : input.at("dependency_answers").items())
            if (v.is_string() && !v.get<std::string>().empty()) texts.push_back(v.get<std::string>());
    if (texts.empty()) return json{{"answer", ""}, {"missing_info", true}};

    const auto q_tokens = engram::text::word_tokens(subquery);
    const bool seeks_name = !q_tokens.empty() && (q_tokens.front() == "which" || q_tokens.front() == "who" ||
                                                  q_tokens.front() == "whom" || q_tokens.front() == "whose");
    if (seeks_name) {
        // A which/who question needs a concrete candidate: some capitalized
        // run in the evidence that the subquery itself does not mention.
        std::unordered_set<std::string> q_stems;
        for (const auto& t : stems_of(content_tokens(subquery))) q_stems.insert(t);
        for (const auto& t : texts) {
            for (const auto& run : capitalized_runs(t)) {
                for (const auto& tok : engram::text::name_tokens(run)) {
                    if (!q_stems.count(engram::text::light_stem(tok)))
                        return json{{"answer", t}, {"missing_info", false}};
                }
            }
        }
        return json{{"answer", texts.front()}, {"missing_info", true}};
    }
    const double cov = token_coverage(subquery, texts);
    return json{{"answer", texts.front()}, {"missing_info", cov < 0.6}};
}

json missing_info_query(const json& input) {
    const std::string subquery = input.value("subquery", "");
    std::vector<std::string> texts;
    if (input.contains("evidence"))
        for (const auto& e : input.at("evidence")) texts.push_back(e.value("text", ""));

    std::unordered_set<std::string> evidence_stems;
    for (const auto& t : texts)
        for (const auto& s : stems_of(content_tokens(t))) evidence_stems.insert(s);

    // Slots the subquery asks about that the evidence never mentions.
    std::vector<std::string> missing;
    std::unordered_set<std::string> seen;
    for (const auto& tok : content_tokens(subquery)) {
        const std::string stem = engram::text::light_stem(tok);
        if (evidence_stems.count(stem) || !seen.insert(stem).second) continue;
        missing.push_back(tok);
        if (missing.size() == 3) break;
    }
    if (missing.empty()) missing.push_back("information");

    // Anchors: evidence-only capitalized runs first, then evidence-only tokens.
    std::unordered_set<std::string> q_stems;
    for (const auto& t : stems_of(content_tokens(subquery))) q_stems.insert(t);
    std::vector<std::string> anchors;
    std::unordered_set<std::string> seen_anchor;
    for (const auto& t : texts) {
        for (const auto& run : capitalized_runs(t)) {
            const auto norm = engram::text::normalize_name(run);
            bool in_query = true;
            for (const auto& tok : engram::text::split_ws(norm))
                if (!q_stems.count(engram::text::light_stem(tok))) in_query = false;
            if (in_query) continue;
            if (seen_anchor.insert(norm).second) anchors.push_back(run);
            if (anchors.size() == 2) break;
        }
        if (anchors.size() == 2) break;
    }
    for (const auto& t : texts) {
        if (anchors.size() >= 3) break;
        for (const auto& tok : content_tokens(t)) {
            const std::string stem = engram::text::light_stem(tok);
            if (q_stems.count(stem) || !seen_anchor.insert(stem).second) continue;
            anchors.push_back(tok);
            if (anchors.size() >= 3) break;
        }
    }
    if (anchors.empty()) anchors.push_back("the evidence");

    const std::string q = "Which " + engram::text::join(missing, " ") + " is associated with " +
                          engram::text::join(anchors, " ") + "?";
    return json{{"missing_info_query", q}};
}

json synthesize(const json& input) {
    const std::string query = input.value("query", "");
    struct Sub {
        std::string answer;
        bool missing = false;
    };
    std::vector<Sub> subs;
    if (input.contains("sub_answers"))
        for (const auto& s : input.at("sub_answers"))
            subs.push_back({s.value("answer", ""), s.value("missing_info", false)});

    static const char* kInsufficient = "Insufficient memory evidence.";
    if (subs.empty()) return json{{"answer", kInsufficient}};
    if (subs.size() == 1)
        return json{{"answer", subs[0].answer.empty() ? kInsufficient : subs[0].answer}};

    std::vector<std::string> usable;
    for (const auto& s : subs)
        if (!s.missing && !s.answer.empty()) usable.push_back(s.answer);
    if (usable.empty()) return json{{"answer", kInsufficient}};
    if (usable.size() == 1) return json{{"answer", usable[0]}};

    // Common content tokens across all usable answers, minus the query's own.
    std::unordered_set<std::string> common;
    for (const auto& t : stems_of(content_tokens(usable[0]))) common.insert(t);
    for (std::size_t i = 1; i < usable.size(); ++i) {
        std::unordered_set<std::string> here;
        for (const auto& t : stems_of(content_tokens(usable[i]))) here.insert(t);
        for (auto it = common.begin(); it != common.end();)
            it = here.count(*it) ? std::next(it) : common.erase(it);
    }
    for (const auto& t : stems_of(content_tokens(query))) common.erase(t);

    if (!common.empty()) {
        std::vector<std::string> surface;
        std::unordered_set<std::string> emitted;
        for (const auto& tok : content_tokens(usable[0])) {
            const std::string stem = engram::text::light_stem(tok);
            if (common.count(stem) && emitted.insert(stem).second) surface.push_back(tok);
        }
        if (!surface.empty()) return json{{"answer", engram::text::join(surface, " ")}};
    }
    return json{{"answer", engram::text::join(usable, " ")}};
}

json judge(const std::string& question, const std::string& gold, const std::string& generated) {
    (void)question;
    // Date surface equivalence.
    if (auto gd = find_date(gold)) {
        if (auto pd = find_date(generated)) {
            const bool year_ok = !gd->year || !pd->year || *gd->year == *pd->year;
            if (gd->month == pd->month && gd->day == pd->day && year_ok)
                return json{{"label", "CORRECT"}};
        }
    }
    const auto gold_tokens = normalize(gold);
    const auto pred_tokens = normalize(generated);
    if (!gold_tokens.empty()) {
        std::map<std::string, int> pred_counts;
        for (const auto& t : pred_tokens) ++pred_counts[t];
        bool contained = true;
        for (const auto& t : gold_tokens) {
            auto it = pred_counts.find(t);
            if (it == pred_counts.end() || it->second == 0) { contained = false; break; }
            --it->second;
        }
        if (contained) return json{{"label", "CORRECT"}};
    }
    if (token_f1(generated, gold).f1 >= 0.6) return json{{"label", "CORRECT"}};
    return json{{"label", "WRONG"}};
}

json simplify(const std::string& question, const std::string& answer) {
    const std::string q_norm = " " + engram::text::normalize_name(question) + " ";
    std::string best;
    std::size_t best_tokens = 0;
    for (const auto& run : capitalized_runs(answer)) {
        const std::string norm = engram::text::normalize_name(run);
        if (norm.empty()) continue;
        if (q_norm.find(" " + norm + " ") != std::string::npos) continue;  // already in the question
        const std::size_t n = engram::text::split_ws(norm).size();
        if (n >= best_tokens) {  // ties resolve to the last occurrence
            best = run;
            best_tokens = n;
        }
    }
    return json{{"answer", best.empty() ? answer : best}};
}

}  // namespace engram::rules
