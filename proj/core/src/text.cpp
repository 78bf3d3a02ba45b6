#include "engram/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

namespace engram::text {

namespace {

bool ascii_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool ascii_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Decompositions for U+00C0..U+017E: accented Latin letters fold to their
// ASCII base letter. Other code points pass through unchanged.
const std::unordered_map<std::uint32_t, std::string>& fold_table() {
    static const std::unordered_map<std::uint32_t, std::string> table = [] {
        std::unordered_map<std::uint32_t, std::string> t;
        auto put = [&t](std::uint32_t from, std::uint32_t to, const char* rep) {
            for (std::uint32_t cp = from; cp <= to; ++cp) t[cp] = rep;
        };
        put(0xC0, 0xC5, "A"); t[0xC6] = "AE"; t[0xC7] = "C";
        put(0xC8, 0xCB, "E"); put(0xCC, 0xCF, "I"); t[0xD0] = "D"; t[0xD1] = "N";
        put(0xD2, 0xD6, "O"); t[0xD8] = "O"; put(0xD9, 0xDC, "U"); t[0xDD] = "Y";
        t[0xDE] = "TH"; t[0xDF] = "ss";
        put(0xE0, 0xE5, "a"); t[0xE6] = "ae"; t[0xE7] = "c";
        put(0xE8, 0xEB, "e"); put(0xEC, 0xEF, "i"); t[0xF0] = "d"; t[0xF1] = "n";
        put(0xF2, 0xF6, "o"); t[0xF8] = "o"; put(0xF9, 0xFC, "u"); t[0xFD] = "y";
        t[0xFE] = "th"; t[0xFF] = "y";
        // Latin Extended-A, upper/lower alternating per code point.
        const char* bases = "AaAaAaCcCcCcCcDdDdEeEeEeEeEeGgGgGgGgHhHhIiIiIiIiIiJjKkkLlLlLlLlLlNnNnNnnNnOoOoOoOOooRrRrRrSsSsSsSsTtTtTtUuUuUuUuUuUuWwYyYZzZzZz";
        for (std::uint32_t cp = 0x100; cp <= 0x17E; ++cp) {
            if (cp == 0x152) { t[cp] = "OE"; continue; }
            if (cp == 0x153) { t[cp] = "oe"; continue; }
            t[cp] = std::string(1, bases[cp - 0x100]);
        }
        return t;
    }();
    return table;
}

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> words = {
        "a", "an", "the", "and", "or", "but", "if", "then", "than", "so",
        "is", "are", "was", "were", "be", "been", "being", "am",
        "do", "does", "did", "have", "has", "had", "will", "would", "can", "could", "should",
        "he", "she", "it", "they", "them", "him", "his", "her", "hers", "its", "their", "theirs",
        "i", "you", "we", "me", "my", "mine", "your", "yours", "our", "ours", "us",
        "of", "in", "on", "at", "to", "from", "by", "with", "for", "as", "into", "onto",
        "that", "this", "these", "those", "there", "here", "up", "down", "out",
        "not", "no", "nor", "only", "own", "same", "such",
        "what", "which", "who", "whom", "whose", "when", "where", "why", "how",
        "really", "very", "often", "both", "also", "too", "about", "over", "under", "again",
        "said", "says", "say", "one", "most", "more", "some", "any", "each", "because",
    };
    return words;
}

}  // namespace

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    while (!s.empty() && ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && ascii_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // drop leading spaces
    for (char c : s) {
        if (ascii_space(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string fold_to_ascii(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    const auto& table = fold_table();
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
            continue;
        }
        // Decode one UTF-8 code point; invalid bytes are dropped.
        std::uint32_t cp = 0;
        std::size_t len = 0;
        if ((c & 0xE0) == 0xC0) { cp = c & 0x1F; len = 2; }
        else if ((c & 0xF0) == 0xE0) { cp = c & 0x0F; len = 3; }
        else if ((c & 0xF8) == 0xF0) { cp = c & 0x07; len = 4; }
        else { ++i; continue; }
        if (i + len > s.size()) { ++i; continue; }
        bool ok = true;
        for (std::size_t j = 1; j < len; ++j) {
            const unsigned char cc = static_cast<unsigned char>(s[i + j]);
            if ((cc & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) { ++i; continue; }
        i += len;
        auto it = table.find(cp);
        if (it != table.end()) {
            out += it->second;
        } else {
            // Re-encode untouched.
            if (cp < 0x800) {
                out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            } else if (cp < 0x10000) {
                out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            } else {
                out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
                out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            }
        }
    }
    return out;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && ascii_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !ascii_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        cur.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            std::string t = trim(cur);
            if (!t.empty()) out.push_back(std::move(t));
            cur.clear();
        }
    }
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (ascii_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view lowercase_token) {
    return stopwords().count(std::string(lowercase_token)) > 0;
}

std::string normalize_name(std::string_view s) {
    const std::string folded = fold_to_ascii(s);
    std::string spaced;
    spaced.reserve(folded.size());
    for (char c : folded) {
        if (ascii_alnum(c)) {
            spaced.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            spaced.push_back(' ');
        }
    }
    return collapse_ws(spaced);
}

std::vector<std::string> name_tokens(std::string_view s) {
    return split_ws(normalize_name(s));
}

std::vector<std::string> strip_titles(std::vector<std::string> tokens) {
    static const std::unordered_set<std::string> titles = {"dr", "mr", "mrs", "ms", "miss", "prof", "sir", "madam"};
    std::size_t i = 0;
    while (i < tokens.size() - (tokens.size() > 1 ? 1 : 0) && titles.count(tokens[i])) ++i;
    tokens.erase(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(i));
    return tokens;
}

double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::unordered_set<std::string> sa(a.begin(), a.end());
    std::unordered_set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& t : sa)
        if (sb.count(t)) ++inter;
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double edit_similarity(std::string_view a, std::string_view b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0 && m == 0) return 1.0;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
        }
        std::swap(prev, cur);
    }
    const double dist = static_cast<double>(prev[m]);
    return 1.0 - dist / static_cast<double>(std::max(n, m));
}

std::string light_stem(std::string_view token) {
    std::string t(token);
    if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') t.pop_back();
    return t;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace engram::text
