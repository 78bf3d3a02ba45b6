#include <chrono>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "engram/store.hpp"
#include "engram/time.hpp"
#include "engram/types.hpp"

using namespace engram;
using nlohmann::json;

TEST_CASE("RFC 3339 parsing matches the independent chrono oracle") {
    // Oracle: std::chrono calendar arithmetic.
    using namespace std::chrono;
    const sys_seconds oracle = sys_days{year{2023} / 5 / 7} + hours{10};
    const auto parsed = parse_timestamp("2023-05-07T10:00:00Z");
    REQUIRE(parsed.has_value());
    CHECK(*parsed == oracle.time_since_epoch().count());
    CHECK(*parsed == 1683453600);

    CHECK(parse_timestamp("1683453600") == 1683453600);
    CHECK(parse_timestamp("2023-05-07T12:00:00+02:00") == 1683453600);
    CHECK(parse_timestamp("2023-05-07T10:00:00.25Z") == 1683453600);
    CHECK(parse_timestamp("2023-05-07 10:00:00Z") == 1683453600);

    CHECK_FALSE(parse_timestamp("yesterday").has_value());
    CHECK_FALSE(parse_timestamp("2023-13-07T10:00:00Z").has_value());
    CHECK_FALSE(parse_timestamp("2023-02-29T10:00:00Z").has_value());  // not a leap year
    CHECK_FALSE(parse_timestamp("2023-05-07T10:00:00").has_value());   // no offset
    CHECK_FALSE(parse_timestamp("").has_value());
}

TEST_CASE("format_rfc3339 round-trips") {
    CHECK(format_rfc3339(1683453600) == "2023-05-07T10:00:00Z");
    CHECK(parse_timestamp(format_rfc3339(123456789)) == 123456789);
}

TEST_CASE("window_of: calendar day") {
    const auto w = window_of(1683453600, WindowUnit::day);  // 2023-05-07T10:00Z
    CHECK(w.start == *parse_timestamp("2023-05-07T00:00:00Z"));
    CHECK(w.end == *parse_timestamp("2023-05-07T23:59:59Z"));
}

TEST_CASE("window_of: ISO week Mon-Sun against the chrono oracle") {
    using namespace std::chrono;
    // 2023-05-07 is a Sunday; its ISO week starts Monday 2023-05-01.
    const auto w = window_of(1683453600, WindowUnit::week);
    CHECK(w.start == *parse_timestamp("2023-05-01T00:00:00Z"));
    CHECK(w.end == *parse_timestamp("2023-05-07T23:59:59Z"));

    // Oracle across a year of days: week start must be the previous (or
    // same) Monday per std::chrono::weekday.
    for (int i = 0; i < 366; ++i) {
        const UnixSeconds ts = 1672531200 + i * 86400 + 3600;  // 2023-01-01 onward
        const auto week = window_of(ts, WindowUnit::week);
        const sys_days day{days{week.start / 86400}};
        CHECK(weekday{day} == Monday);
        CHECK(week.end - week.start == 7 * 86400 - 1);
        CHECK(week.contains(ts));
    }
}

TEST_CASE("window_of: leap month") {
    const auto ts = *parse_timestamp("2024-02-29T00:00:00Z");
    const auto w = window_of(ts, WindowUnit::month);
    CHECK(w.start == *parse_timestamp("2024-02-01T00:00:00Z"));
    CHECK(w.end == *parse_timestamp("2024-02-29T23:59:59Z"));
}

TEST_CASE("window_of always contains its timestamp") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<UnixSeconds> dist(1, 4102444800LL);  // through 2100
    for (int i = 0; i < 2000; ++i) {
        const UnixSeconds ts = dist(rng);
        for (const auto unit : {WindowUnit::day, WindowUnit::week, WindowUnit::month, WindowUnit::year}) {
            const auto w = window_of(ts, unit);
            CHECK(w.contains(ts));
            CHECK(w.valid());
        }
    }
}

TEST_CASE("ingest_fragment validates and is idempotent") {
    MemoryStore store;
    const json rec = {{"conversation_id", "c"}, {"speaker", "A"},
                      {"timestamp", "2023-05-07T10:00:00Z"}, {"text", "hi"}};
    const auto first = store.ingest_fragment(rec);
    CHECK(first.created);
    CHECK(first.fragment->timestamp == 1683453600);

    const auto second = store.ingest_fragment(rec);
    CHECK_FALSE(second.created);
    CHECK(second.fragment->id == first.fragment->id);
    CHECK(store.fragments().size() == 1);

    json bad_ts = rec;
    bad_ts["timestamp"] = "yesterday";
    CHECK_THROWS_AS(store.ingest_fragment(bad_ts), IngestError);
    try {
        store.ingest_fragment(bad_ts);
    } catch (const IngestError& e) {
        CHECK(e.field_name == "timestamp");
    }

    json empty_text = rec;
    empty_text["text"] = "   ";
    CHECK_THROWS_AS(store.ingest_fragment(empty_text), IngestError);
    try {
        store.ingest_fragment(empty_text);
    } catch (const IngestError& e) {
        CHECK(e.field_name == "text");
    }
}

TEST_CASE("cost ledger totals equal exact sums of per-call records") {
    CostLedger ledger;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int64_t> dist(0, 1000);
    std::int64_t prompt = 0, completion = 0, calls = 0;
    for (int i = 0; i < 500; ++i) {
        CostRecord rec;
        rec.stage = static_cast<CostStage>(i % 4);
        rec.prompt_tokens = dist(rng);
        rec.completion_tokens = dist(rng);
        rec.call_count = 1 + static_cast<std::int64_t>(i % 3);
        if (rec.stage == CostStage::retrieve) {
            prompt += rec.prompt_tokens;
            completion += rec.completion_tokens;
            calls += rec.call_count;
        }
        ledger.add(rec);
    }
    const auto totals = ledger.totals(CostStage::retrieve);
    CHECK(totals.prompt_tokens == prompt);
    CHECK(totals.completion_tokens == completion);
    CHECK(totals.call_count == calls);

    // Grand total equals the sum over stages.
    CostLedger::Totals sum;
    for (const auto stage : {CostStage::index, CostStage::retrieve, CostStage::generate, CostStage::judge})
        sum += ledger.totals(stage);
    const auto grand = ledger.grand_total();
    CHECK(grand.prompt_tokens == sum.prompt_tokens);
    CHECK(grand.completion_tokens == sum.completion_tokens);
    CHECK(grand.call_count == sum.call_count);
}

TEST_CASE("embedding vectors normalize to unit length") {
    const auto v = EmbeddingVector::normalized({3.0f, 4.0f});
    CHECK(v.dim() == 2);
    CHECK(cosine(v, v) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(v.values[0] == doctest::Approx(0.6f));
    CHECK_THROWS(EmbeddingVector::normalized({0.0f, 0.0f}));

    const auto w = EmbeddingVector::normalized({4.0f, -3.0f});
    CHECK(cosine(v, w) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK_THROWS(cosine(v, EmbeddingVector::normalized({1.0f, 0.0f, 0.0f})));
}

TEST_CASE("point intervals and hulls") {
    const auto p = TimeInterval::point(100);
    CHECK(p.is_point());
    CHECK(TimeInterval::hull({0, 10}, {5, 15}) == TimeInterval{0, 15});
    CHECK(TimeInterval{0, 10}.intersects({10, 20}));
    CHECK_FALSE(TimeInterval{0, 10}.intersects({11, 20}));
}
