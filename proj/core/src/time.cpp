#include "engram/time.hpp"

#include <cctype>
#include <cstdio>

namespace engram {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

unsigned last_day_of_month(int y, unsigned m) {
    static constexpr unsigned char days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return (m == 2 && is_leap(y)) ? 29 : days[m - 1];
}

}  // namespace

const char* window_unit_name(WindowUnit u) {
    switch (u) {
        case WindowUnit::day: return "day";
        case WindowUnit::week: return "week";
        case WindowUnit::month: return "month";
        case WindowUnit::year: return "year";
    }
    return "day";
}

std::optional<WindowUnit> window_unit_from_name(std::string_view name) {
    if (name == "day") return WindowUnit::day;
    if (name == "week") return WindowUnit::week;
    if (name == "month") return WindowUnit::month;
    if (name == "year") return WindowUnit::year;
    return std::nullopt;
}

// Howard Hinnant's public-domain civil calendar algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), m, d};
}

unsigned iso_weekday_from_days(std::int64_t z) {
    // 1970-01-01 was a Thursday (ISO index 3).
    std::int64_t w = (z + 3) % 7;
    if (w < 0) w += 7;
    return static_cast<unsigned>(w);
}

TimeInterval window_of(UnixSeconds ts, WindowUnit unit) {
    const std::int64_t day = floor_div(ts, kSecondsPerDay);
    const CivilDate cd = civil_from_days(day);
    std::int64_t start_day = 0;
    std::int64_t next_day = 0;
    switch (unit) {
        case WindowUnit::day:
            start_day = day;
            next_day = day + 1;
            break;
        case WindowUnit::week: {
            start_day = day - iso_weekday_from_days(day);
            next_day = start_day + 7;
            break;
        }
        case WindowUnit::month: {
            start_day = days_from_civil(cd.year, cd.month, 1);
            next_day = start_day + last_day_of_month(cd.year, cd.month);
            break;
        }
        case WindowUnit::year: {
            start_day = days_from_civil(cd.year, 1, 1);
            next_day = days_from_civil(cd.year + 1, 1, 1);
            break;
        }
    }
    return {start_day * kSecondsPerDay, next_day * kSecondsPerDay - 1};
}

namespace {

bool parse_fixed_digits(std::string_view s, size_t pos, size_t n, int& out) {
    if (pos + n > s.size()) return false;
    int v = 0;
    for (size_t i = 0; i < n; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

std::optional<UnixSeconds> parse_timestamp(std::string_view raw) {
    // Trim surrounding whitespace.
    while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.front()))) raw.remove_prefix(1);
    while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
    if (raw.empty()) return std::nullopt;

    // Plain integer epoch seconds (optionally signed).
    {
        size_t i = (raw[0] == '-' || raw[0] == '+') ? 1 : 0;
        bool all_digits = i < raw.size();
        for (size_t j = i; j < raw.size(); ++j) {
            if (raw[j] < '0' || raw[j] > '9') { all_digits = false; break; }
        }
        if (all_digits) {
            std::int64_t v = 0;
            bool neg = raw[0] == '-';
            for (size_t j = i; j < raw.size(); ++j) {
                if (v > (INT64_MAX - 9) / 10) return std::nullopt;
                v = v * 10 + (raw[j] - '0');
            }
            return neg ? -v : v;
        }
    }

    // RFC 3339: YYYY-MM-DD[Tt ]HH:MM:SS[.frac](Z|±HH:MM)
    int year, month, dayv, hour, minute, second;
    if (!parse_fixed_digits(raw, 0, 4, year)) return std::nullopt;
    if (raw.size() < 10 || raw[4] != '-' || raw[7] != '-') return std::nullopt;
    if (!parse_fixed_digits(raw, 5, 2, month)) return std::nullopt;
    if (!parse_fixed_digits(raw, 8, 2, dayv)) return std::nullopt;
    if (month < 1 || month > 12) return std::nullopt;
    if (dayv < 1 || dayv > static_cast<int>(last_day_of_month(year, static_cast<unsigned>(month)))) return std::nullopt;

    size_t pos = 10;
    if (pos >= raw.size() || (raw[pos] != 'T' && raw[pos] != 't' && raw[pos] != ' ')) return std::nullopt;
    ++pos;
    if (!parse_fixed_digits(raw, pos, 2, hour)) return std::nullopt;
    if (pos + 2 >= raw.size() || raw[pos + 2] != ':') return std::nullopt;
    if (!parse_fixed_digits(raw, pos + 3, 2, minute)) return std::nullopt;
    if (pos + 5 >= raw.size() || raw[pos + 5] != ':') return std::nullopt;
    if (!parse_fixed_digits(raw, pos + 6, 2, second)) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;  // 60 tolerated (leap second), clamped
    if (second == 60) second = 59;
    pos += 8;

    // Fractional seconds are truncated.
    if (pos < raw.size() && raw[pos] == '.') {
        ++pos;
        size_t digits = 0;
        while (pos < raw.size() && raw[pos] >= '0' && raw[pos] <= '9') { ++pos; ++digits; }
        if (digits == 0) return std::nullopt;
    }

    if (pos >= raw.size()) return std::nullopt;
    std::int64_t offset_seconds = 0;
    if (raw[pos] == 'Z' || raw[pos] == 'z') {
        ++pos;
    } else if (raw[pos] == '+' || raw[pos] == '-') {
        const bool neg = raw[pos] == '-';
        ++pos;
        int oh, om;
        if (!parse_fixed_digits(raw, pos, 2, oh)) return std::nullopt;
        if (pos + 2 >= raw.size() || raw[pos + 2] != ':') return std::nullopt;
        if (!parse_fixed_digits(raw, pos + 3, 2, om)) return std::nullopt;
        if (oh > 23 || om > 59) return std::nullopt;
        pos += 5;
        offset_seconds = (neg ? -1 : 1) * (oh * 3600 + om * 60);
    } else {
        return std::nullopt;
    }
    if (pos != raw.size()) return std::nullopt;

    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(dayv));
    return days * kSecondsPerDay + hour * 3600 + minute * 60 + second - offset_seconds;
}

std::string format_rfc3339(UnixSeconds ts) {
    const std::int64_t day = floor_div(ts, kSecondsPerDay);
    std::int64_t sod = ts - day * kSecondsPerDay;
    const CivilDate cd = civil_from_days(day);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", cd.year, cd.month, cd.day,
                  static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60));
    return buf;
}

}  // namespace engram
