#pragma once
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "engram/types.hpp"

namespace engram {

// Raw-record validation failure; carries the offending field name.
class IngestError : public std::runtime_error {
public:
    IngestError(const std::string& field, const std::string& what)
        : std::runtime_error(what), field_name(field) {}
    std::string field_name;
};

// Fixed-dimension row store for embeddings. Row ids are dense and stable.
class VectorStore {
public:
    explicit VectorStore(int dim = 0) : dim_(dim) {}

    int dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }

    // First add pins the dimension when constructed with 0; later drift is a
    // hard error.
    std::int32_t add(const EmbeddingVector& v);
    EmbeddingVector get(std::int32_t id) const;

    const std::vector<float>& raw() const { return data_; }
    void assign_raw(int dim, std::vector<float> data);

private:
    int dim_ = 0;
    std::vector<float> data_;
};

// Fragments, events, and their embeddings. Id assignment and writes are
// single-threaded; reads may be concurrent between mutations.
class MemoryStore {
public:
    struct FragmentIngest {
        const MemoryFragment* fragment = nullptr;
        bool created = false;
    };

    // Accepts {"conversation_id","speaker","timestamp","text","meta"?} with
    // the timestamp as epoch seconds or RFC 3339. Idempotent on the
    // (conversation_id, speaker, timestamp, text) quadruple. Throws
    // IngestError naming the field on malformed input.
    FragmentIngest ingest_fragment(const nlohmann::json& raw);

    const MemoryFragment* fragment(const std::string& id) const;
    const std::vector<MemoryFragment>& fragments() const { return fragments_; }
    void set_fragment_embedding(const std::string& id, std::int32_t embedding_id);

    // Assigns an id. The event's normalized text joins the dedupe index.
    const MemoryEvent& add_event(MemoryEvent ev);
    const MemoryEvent* event(const std::string& id) const;
    const std::vector<MemoryEvent>& events() const { return events_; }
    // Existing event whose normalized text matches (reinforcement probe).
    const MemoryEvent* find_event_by_normalized_text(const std::string& key) const;
    // Bumps reinforcement_count, advances last_reinforced, links the fragment.
    void reinforce_event(const std::string& id, UnixSeconds at, const std::string& frag_id);
    // Reinforcement via consolidation participation.
    void reinforce_event_consolidated(const std::string& id, UnixSeconds at);
    void set_event_embedding(const std::string& id, std::int32_t embedding_id);

    std::vector<std::string> event_ids_for_fragment(const std::string& frag_id) const;
    // Up to `n` fragments of the same conversation ingested before `frag_id`.
    std::vector<const MemoryFragment*> prior_neighbors(const std::string& frag_id, int n) const;

    VectorStore& vectors() { return vectors_; }
    const VectorStore& vectors() const { return vectors_; }

    std::optional<UnixSeconds> min_fragment_ts() const;
    std::optional<UnixSeconds> max_fragment_ts() const;
    double history_age_days() const;

    int degraded_extractions = 0;
    int extraction_warnings = 0;

    nlohmann::json dump_fragments() const;
    nlohmann::json dump_events() const;
    void load_fragments(const nlohmann::json& arr);
    void load_events(const nlohmann::json& arr);

    // Evaluation-style normalization key used by the reinforcement dedupe.
    static std::string normalized_text_key(const std::string& text);

private:
    std::string new_fragment_id();
    std::string new_event_id();

    std::vector<MemoryFragment> fragments_;
    std::vector<MemoryEvent> events_;
    VectorStore vectors_;
    std::unordered_map<std::string, std::size_t> fragment_by_id_;
    std::unordered_map<std::string, std::size_t> event_by_id_;
    std::unordered_map<std::string, std::string> fragment_by_key_;  // idempotence quadruple
    std::unordered_map<std::string, std::string> event_by_normtext_;
    std::unordered_map<std::string, std::vector<std::string>> events_by_fragment_;
    std::int64_t next_fragment_ = 1;
    std::int64_t next_event_ = 1;
};

}  // namespace engram
