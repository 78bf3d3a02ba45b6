#pragma once
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "engram/time.hpp"

namespace engram {

// One timestamped raw conversation unit; the provenance anchor for
// everything derived from it. Fragments carry an embedding so SHORT-scope
// retrieval can search them directly.
struct MemoryFragment {
    std::string id;
    std::string conversation_id;
    std::string speaker;
    UnixSeconds timestamp = 0;
    std::string text;
    std::map<std::string, std::string> source_meta;
    std::int32_t embedding_id = -1;
};

enum class EventType : std::uint8_t {
    episodic,
    plan,
    preference,
    fact,
    relationship,
    status,
    procedure,
    other,
};

const char* event_type_name(EventType t);
EventType event_type_from_name(std::string_view name);  // unknown names map to `other`

// An atomic extracted claim. Tree leaves wrap these. reinforcement_count and
// last_reinforced feed the robustness decay term.
struct MemoryEvent {
    std::string id;
    std::string event_text;
    std::vector<std::string> frag_ids;
    TimeInterval time_range;
    EventType event_type = EventType::other;
    std::vector<std::string> participants;
    std::int64_t reinforcement_count = 0;
    UnixSeconds last_reinforced = 0;
    std::int32_t embedding_id = -1;
};

// Fixed-dimension vector, unit L2 norm after normalization.
struct EmbeddingVector {
    std::vector<float> values;

    int dim() const { return static_cast<int>(values.size()); }
    bool empty() const { return values.empty(); }

    // Renormalizes to unit length; throws on the zero vector.
    static EmbeddingVector normalized(std::vector<float> raw);
};

// Dot product of unit vectors; throws on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class CostStage : std::uint8_t { index, retrieve, generate, judge };

const char* cost_stage_name(CostStage s);

struct CostRecord {
    CostStage stage = CostStage::index;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t wall_ms = 0;
    std::int64_t call_count = 1;  // attempts, including retries
};

// Append-only cost accounting. Totals are exact sums of the per-call
// records; appends are atomic so providers may record concurrently.
class CostLedger {
public:
    struct Totals {
        std::int64_t prompt_tokens = 0;
        std::int64_t completion_tokens = 0;
        std::int64_t wall_ms = 0;
        std::int64_t call_count = 0;

        std::int64_t tokens() const { return prompt_tokens + completion_tokens; }
        Totals& operator+=(const Totals& o) {
            prompt_tokens += o.prompt_tokens;
            completion_tokens += o.completion_tokens;
            wall_ms += o.wall_ms;
            call_count += o.call_count;
            return *this;
        }
    };

    void add(const CostRecord& rec) {
        std::lock_guard<std::mutex> lock(mu_);
        records_.push_back(rec);
    }

    Totals totals(CostStage stage) const {
        std::lock_guard<std::mutex> lock(mu_);
        Totals t;
        for (const auto& r : records_) {
            if (r.stage != stage) continue;
            t.prompt_tokens += r.prompt_tokens;
            t.completion_tokens += r.completion_tokens;
            t.wall_ms += r.wall_ms;
            t.call_count += r.call_count;
        }
        return t;
    }

    Totals grand_total() const {
        std::lock_guard<std::mutex> lock(mu_);
        Totals t;
        for (const auto& r : records_) {
            t.prompt_tokens += r.prompt_tokens;
            t.completion_tokens += r.completion_tokens;
            t.wall_ms += r.wall_ms;
            t.call_count += r.call_count;
        }
        return t;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_.size();
    }

    std::vector<CostRecord> snapshot() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_;
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        records_.clear();
    }

private:
    mutable std::mutex mu_;
    std::vector<CostRecord> records_;
};

}  // namespace engram
