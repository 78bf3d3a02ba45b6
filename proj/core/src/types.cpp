#include "engram/types.hpp"

#include <cmath>

namespace engram {

const char* event_type_name(EventType t) {
    switch (t) {
        case EventType::episodic: return "episodic";
        case EventType::plan: return "plan";
        case EventType::preference: return "preference";
        case EventType::fact: return "fact";
        case EventType::relationship: return "relationship";
        case EventType::status: return "status";
        case EventType::procedure: return "procedure";
        case EventType::other: return "other";
    }
    return "other";
}

EventType event_type_from_name(std::string_view name) {
    if (name == "episodic") return EventType::episodic;
    if (name == "plan") return EventType::plan;
    if (name == "preference") return EventType::preference;
    if (name == "fact") return EventType::fact;
    if (name == "relationship") return EventType::relationship;
    if (name == "status") return EventType::status;
    if (name == "procedure") return EventType::procedure;
    return EventType::other;
}

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
    double sq = 0.0;
    for (float v : raw) sq += static_cast<double>(v) * static_cast<double>(v);
    if (sq <= 0.0) throw std::invalid_argument("cannot normalize a zero embedding vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : raw) v = static_cast<float>(v * inv);
    return EmbeddingVector{std::move(raw)};
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()));
    double dot = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        dot += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    return dot;
}

const char* cost_stage_name(CostStage s) {
    switch (s) {
        case CostStage::index: return "index";
        case CostStage::retrieve: return "retrieve";
        case CostStage::generate: return "generate";
        case CostStage::judge: return "judge";
    }
    return "index";
}

}  // namespace engram
