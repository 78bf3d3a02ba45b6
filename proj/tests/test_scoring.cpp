#include <cmath>
#include <random>

#include "doctest.h"

#include "engram/config.hpp"
#include "engram/scoring.hpp"
#include "oracle_mpfr.hpp"

using namespace engram;

namespace {
const ScoringConfig kCfg;  // defaults
}

TEST_CASE("semantic similarity is the raw cosine") {
    const auto v = EmbeddingVector::normalized({1.0f, 2.0f, 2.0f});
    CHECK(semantic_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-9));
    const auto e1 = EmbeddingVector::normalized({1.0f, 0.0f, 0.0f});
    const auto e2 = EmbeddingVector::normalized({0.0f, 1.0f, 0.0f});
    CHECK(semantic_similarity(e1, e2) == doctest::Approx(0.0));
    auto neg = v;
    for (auto& x : neg.values) x = -x;
    CHECK(semantic_similarity(v, neg) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("temporal relevance: identical intervals score 1 within 1e-6") {
    CHECK(temporal_relevance({100, 200}, {100, 200}, kCfg) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("temporal relevance: hand-derived overlap case") {
    // [0,10] vs [5,15], lambda 0.5: hull 15, overlap 5, centers 5 and 10,
    // so 0.5*(5/15) + 0.5*(1 - 5/15) = 0.5 regardless of epsilon.
    CHECK(temporal_relevance({0, 10}, {5, 15}, kCfg) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("temporal relevance: identical point intervals score exactly 1") {
    CHECK(temporal_relevance(TimeInterval::point(42), TimeInterval::point(42), kCfg) == 1.0);
    // Distinct points decay toward zero.
    CHECK(temporal_relevance(TimeInterval::point(0), TimeInterval::point(1000), kCfg) <
          temporal_relevance(TimeInterval::point(0), TimeInterval::point(10), kCfg) + 1e-9);
}

TEST_CASE("temporal relevance: bounds, symmetry, and high-precision agreement") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<std::int64_t> start(0, 2000000000LL);
    std::uniform_int_distribution<std::int64_t> len(0, 400 * 86400LL);
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t ms = start(rng), me = ms + len(rng);
        const std::int64_t ks = start(rng), ke = ks + len(rng);
        const double t = temporal_relevance({ms, me}, {ks, ke}, kCfg);
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
        CHECK(t == doctest::Approx(temporal_relevance({ks, ke}, {ms, me}, kCfg)).epsilon(1e-12));
        const double hp = oracle::temporal_relevance_hp(ms, me, ks, ke, kCfg.lambda, kCfg.epsilon);
        CHECK(std::abs(t - hp) < 1e-9);
    }
}

TEST_CASE("memory robustness: one year unreinforced decays to exp(-1)") {
    const double r = memory_robustness(365 * 86400, 0, 0.0, kCfg);
    CHECK(r == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(std::abs(r - 0.367879) < 1e-4);
}

TEST_CASE("memory robustness: zero elapsed and clamped future reinforcement") {
    CHECK(memory_robustness(1000, 1000, 0.0, kCfg) == doctest::Approx(1.0));
    CHECK(memory_robustness(500, 1000, 0.0, kCfg) == doctest::Approx(1.0));  // clamp
}

TEST_CASE("memory robustness: reinforcement slows decay; ln(1+n)=1 case") {
    // n = e-1 makes ln(1+n) exactly 1, so the scale becomes tau*(1+eta).
    const double n = std::exp(1.0) - 1.0;
    const double r = memory_robustness(365 * 86400, 0, n, kCfg);
    CHECK(r == doctest::Approx(std::exp(-1.0 / 1.5)).epsilon(1e-9));
    const double hp = oracle::memory_robustness_hp(365 * 86400, 0, n, kCfg.tau_seconds, kCfg.eta);
    CHECK(std::abs(r - hp) < 1e-9);
    CHECK(std::abs(r - 0.5134) < 1e-4);
}

TEST_CASE("memory robustness agreement with the high-precision oracle") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::int64_t> elapsed(0, 5 * 365 * 86400LL);
    std::uniform_real_distribution<double> n(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t e = elapsed(rng);
        const double nm = n(rng);
        const double r = memory_robustness(e, 0, nm, kCfg);
        const double hp = oracle::memory_robustness_hp(e, 0, nm, kCfg.tau_seconds, kCfg.eta);
        CHECK(std::abs(r - hp) < 1e-9);
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("robustness decreases with elapsed time, increases with reinforcement") {
    for (int i = 1; i < 50; ++i) {
        CHECK(memory_robustness(i * 86400, 0, 3.0, kCfg) < memory_robustness((i - 1) * 86400, 0, 3.0, kCfg));
        CHECK(memory_robustness(100 * 86400, 0, static_cast<double>(i), kCfg) >=
              memory_robustness(100 * 86400, 0, static_cast<double>(i - 1), kCfg));
    }
}

TEST_CASE("combined score: weighted sum and missing-hint zeroing") {
    CHECK(combined_score(1.0, 1.0, 1.0, kCfg) == doctest::Approx(1.0));
    // (0.5, hint absent, 0.3679): 0.7*0.5 + 0.15*0 + 0.15*0.3679
    CHECK(combined_score(0.5, std::nullopt, 0.3679, kCfg) == doctest::Approx(0.405185).epsilon(1e-4));
    ScoringConfig proj;
    proj.theta1 = 1.0;
    proj.theta2 = 0.0;
    proj.theta3 = 0.0;
    CHECK(combined_score(0.123, 0.9, 0.9, proj) == doctest::Approx(0.123));
}

TEST_CASE("event-level score mirrors the combined shape with w-weights") {
    CHECK(event_level_score(1.0, 1.0, 1.0, kCfg) == doctest::Approx(1.0));
    CHECK(event_level_score(1.0, std::nullopt, 0.0, kCfg) == doctest::Approx(0.70));
    // time term zero when no hint: 0.70*sim + 0.15*rob
    CHECK(event_level_score(0.4, std::nullopt, 0.6, kCfg) == doctest::Approx(0.70 * 0.4 + 0.15 * 0.6));
}

TEST_CASE("monotonicity in each component for non-negative weights") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sim(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double s = sim(rng), t = unit(rng), r = unit(rng);
        const double ds = unit(rng) * 0.2, dt = unit(rng) * 0.2, dr = unit(rng) * 0.2;
        const double base = combined_score(s, t, r, kCfg);
        CHECK(combined_score(s + ds, t, r, kCfg) >= base - 1e-12);
        CHECK(combined_score(s, t + dt, r, kCfg) >= base - 1e-12);
        CHECK(combined_score(s, t, r + dr, kCfg) >= base - 1e-12);
    }
}

TEST_CASE("positive scaling of the weights preserves the argmax ordering") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScoringConfig scaled = kCfg;
    const double c = 3.7;
    scaled.theta1 *= c;
    scaled.theta2 *= c;
    scaled.theta3 *= c;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t best_a = 0, best_b = 0;
        double best_va = -1e18, best_vb = -1e18;
        for (std::size_t i = 0; i < 10; ++i) {
            const double s = unit(rng), t = unit(rng), r = unit(rng);
            const double va = combined_score(s, t, r, kCfg);
            const double vb = combined_score(s, t, r, scaled);
            if (va > best_va) { best_va = va; best_a = i; }
            if (vb > best_vb) { best_vb = vb; best_b = i; }
        }
        CHECK(best_a == best_b);
    }
}

TEST_CASE("default weights load from config JSON") {
    const auto cfg = EngineConfig::from_json(nlohmann::json::parse(R"({"scoring": {}})"));
    CHECK(cfg.scoring.w_sem == doctest::Approx(0.70));
    CHECK(cfg.scoring.w_time == doctest::Approx(0.15));
    CHECK(cfg.scoring.w_mem == doctest::Approx(0.15));
    CHECK(cfg.scoring.theta1 == doctest::Approx(0.70));
    CHECK(cfg.scoring.theta2 == doctest::Approx(0.15));
    CHECK(cfg.scoring.theta3 == doctest::Approx(0.15));
    CHECK(cfg.scoring.tau_seconds == doctest::Approx(365.0 * 86400.0));
    CHECK(cfg.scoring.eta == doctest::Approx(0.5));
    CHECK(cfg.scoring.lambda == doctest::Approx(0.5));
    CHECK(cfg.scoring.epsilon == doctest::Approx(1e-6));

    // Round-trip through serialization.
    const auto cycled = EngineConfig::from_json(cfg.to_json());
    CHECK(cycled.scoring.w_sem == doctest::Approx(0.70));
    CHECK(cycled.to_json() == cfg.to_json());
}

TEST_CASE("scoring config validation") {
    ScoringConfig bad = kCfg;
    bad.lambda = 1.5;
    CHECK_THROWS(bad.validate());
    bad = kCfg;
    bad.epsilon = 0.0;
    CHECK_THROWS(bad.validate());
    bad = kCfg;
    bad.tau_seconds = -1.0;
    CHECK_THROWS(bad.validate());
}
