#include "engram/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace engram {

void ScoringConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("scoring.lambda must be in [0,1]");
    if (epsilon <= 0.0) throw std::invalid_argument("scoring.epsilon must be > 0");
    if (tau_seconds <= 0.0) throw std::invalid_argument("scoring.tau_seconds must be > 0");
    if (eta < 0.0) throw std::invalid_argument("scoring.eta must be >= 0");
    if (theta1 < 0.0 || theta2 < 0.0 || theta3 < 0.0)
        throw std::invalid_argument("scoring.theta weights must be non-negative");
    if (w_sem < 0.0 || w_time < 0.0 || w_mem < 0.0)
        throw std::invalid_argument("scoring.w weights must be non-negative");
}

double semantic_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine(a, b);
}

double temporal_relevance(const TimeInterval& evidence, const TimeInterval& hint, const ScoringConfig& cfg) {
    if (!evidence.valid() || !hint.valid()) throw std::invalid_argument("temporal_relevance: invalid interval");
    if (evidence.is_point() && hint.is_point() && evidence.start == hint.start) return 1.0;

    const double hull = static_cast<double>(TimeInterval::hull(evidence, hint).length());
    const double denom = hull + cfg.epsilon;
    const double overlap_lo = static_cast<double>(std::max(evidence.start, hint.start));
    const double overlap_hi = static_cast<double>(std::min(evidence.end, hint.end));
    const double overlap = std::max(0.0, overlap_hi - overlap_lo);
    const double center_dist = std::abs(evidence.center() - hint.center());

    const double t = cfg.lambda * (overlap / denom) + (1.0 - cfg.lambda) * (1.0 - center_dist / denom);
    return std::clamp(t, 0.0, 1.0);
}

double memory_robustness(UnixSeconds now, UnixSeconds last_reinforced, double reinforcements,
                         const ScoringConfig& cfg) {
    double elapsed = static_cast<double>(now - last_reinforced);
    if (elapsed < 0.0) elapsed = 0.0;  // future-dated reinforcement: treat as fresh
    if (reinforcements < 0.0) reinforcements = 0.0;
    const double scale = cfg.tau_seconds * (1.0 + cfg.eta * std::log1p(reinforcements));
    return std::exp(-elapsed / scale);
}

double combined_score(double s, std::optional<double> t, double r, const ScoringConfig& cfg) {
    return cfg.theta1 * s + cfg.theta2 * t.value_or(0.0) + cfg.theta3 * r;
}

double event_level_score(double sim, std::optional<double> time_align, double robustness,
                         const ScoringConfig& cfg) {
    return cfg.w_sem * sim + cfg.w_time * time_align.value_or(0.0) + cfg.w_mem * robustness;
}

}  // namespace engram
