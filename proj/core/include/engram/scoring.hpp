#pragma once
#include <optional>

#include "engram/time.hpp"
#include "engram/types.hpp"

namespace engram {

// Weights and constants for evidence scoring. theta* weigh the final
// evidence-chain score; w_* weigh the event-level gathering score.
struct ScoringConfig {
    double theta1 = 0.70;  // semantic similarity
    double theta2 = 0.15;  // temporal relevance
    double theta3 = 0.15;  // memory robustness
    double lambda = 0.5;   // overlap vs. center-distance balance
    double epsilon = 1e-6;
    double tau_seconds = 365.0 * 86400.0;  // forgetting time scale
    double eta = 0.5;                      // reinforcement effect
    double w_sem = 0.70;
    double w_time = 0.15;
    double w_mem = 0.15;

    void validate() const;
};

// Raw cosine of unit vectors, in [-1, 1].
double semantic_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Temporal alignment of two intervals: lambda-weighted overlap ratio plus
// center proximity, both normalized by the covering hull. Clamped to [0, 1];
// identical point intervals score exactly 1.
double temporal_relevance(const TimeInterval& evidence, const TimeInterval& hint, const ScoringConfig& cfg);

// Exponential retention decay with reinforcement slowdown. `reinforcements`
// is accepted as a real so callers can probe the closed form directly.
// now < last_reinforced clamps elapsed time to zero (returns 1).
double memory_robustness(UnixSeconds now, UnixSeconds last_reinforced, double reinforcements,
                         const ScoringConfig& cfg);

// Final chain score: theta1*S + theta2*T + theta3*R. A missing temporal
// hint zeroes the T contribution.
double combined_score(double s, std::optional<double> t, double r, const ScoringConfig& cfg);

// Candidate-gathering score with the w-weights; same shape as combined_score.
double event_level_score(double sim, std::optional<double> time_align, double robustness,
                         const ScoringConfig& cfg);

}  // namespace engram
