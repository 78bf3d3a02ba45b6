#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace engram {

using UnixSeconds = std::int64_t;

// Closed interval [start, end] in unix seconds (UTC). A point interval
// (start == end) is legal and flagged via is_point().
struct TimeInterval {
    UnixSeconds start = 0;
    UnixSeconds end = 0;

    bool is_point() const { return start == end; }
    bool valid() const { return start <= end; }
    UnixSeconds length() const { return end - start; }
    double center() const { return (static_cast<double>(start) + static_cast<double>(end)) / 2.0; }

    bool contains(UnixSeconds t) const { return t >= start && t <= end; }
    bool intersects(const TimeInterval& o) const { return start <= o.end && o.start <= end; }

    static TimeInterval point(UnixSeconds t) { return {t, t}; }
    static TimeInterval hull(const TimeInterval& a, const TimeInterval& b) {
        return {a.start < b.start ? a.start : b.start, a.end > b.end ? a.end : b.end};
    }

    bool operator==(const TimeInterval&) const = default;
};

enum class WindowUnit { day, week, month, year };

const char* window_unit_name(WindowUnit u);
std::optional<WindowUnit> window_unit_from_name(std::string_view name);

// Proleptic Gregorian civil-date arithmetic, all UTC.
struct CivilDate {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31
};

std::int64_t days_from_civil(int y, unsigned m, unsigned d);
CivilDate civil_from_days(std::int64_t z);
// 0 = Monday .. 6 = Sunday (ISO order).
unsigned iso_weekday_from_days(std::int64_t z);

// Calendar-aligned UTC window containing `ts`: calendar day, ISO-8601 week
// (Mon..Sun), calendar month, or calendar year. Closed representation:
// end = first second of the next window minus 1.
TimeInterval window_of(UnixSeconds ts, WindowUnit unit);

// Accepts integer epoch seconds or an RFC 3339 timestamp
// ("2023-05-07T10:00:00Z", fractional seconds truncated, numeric offsets
// applied). Returns nullopt on anything else.
std::optional<UnixSeconds> parse_timestamp(std::string_view raw);

// "2023-05-07T10:00:00Z" for display and dumps.
std::string format_rfc3339(UnixSeconds ts);

}  // namespace engram
