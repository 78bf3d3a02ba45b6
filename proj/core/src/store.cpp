#include "engram/store.hpp"

#include <algorithm>

#include "engram/text.hpp"

namespace engram {

using nlohmann::json;

std::int32_t VectorStore::add(const EmbeddingVector& v) {
    if (v.empty()) throw std::invalid_argument("vector store: empty embedding");
    if (dim_ == 0) dim_ = v.dim();
    if (v.dim() != dim_)
        throw std::runtime_error("embedding dimension drift: store holds " + std::to_string(dim_) +
                                 ", got " + std::to_string(v.dim()));
    const std::int32_t id = static_cast<std::int32_t>(size());
    data_.insert(data_.end(), v.values.begin(), v.values.end());
    return id;
}

EmbeddingVector VectorStore::get(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= size())
        throw std::out_of_range("vector store: bad embedding id " + std::to_string(id));
    const std::size_t offset = static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_);
    return EmbeddingVector{std::vector<float>(data_.begin() + static_cast<std::ptrdiff_t>(offset),
                                              data_.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(dim_)))};
}

void VectorStore::assign_raw(int dim, std::vector<float> data) {
    if (dim <= 0 && !data.empty()) throw std::invalid_argument("vector store: bad dimension");
    if (dim > 0 && data.size() % static_cast<std::size_t>(dim) != 0)
        throw std::invalid_argument("vector store: data size not a multiple of dim");
    dim_ = dim;
    data_ = std::move(data);
}

std::string MemoryStore::normalized_text_key(const std::string& text) {
    std::string out;
    for (const auto& tok : text::word_tokens(text::fold_to_ascii(text))) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

std::string MemoryStore::new_fragment_id() { return "f" + std::to_string(next_fragment_++); }
std::string MemoryStore::new_event_id() { return "ev" + std::to_string(next_event_++); }

MemoryStore::FragmentIngest MemoryStore::ingest_fragment(const json& raw) {
    if (!raw.is_object()) throw IngestError("record", "ingest record must be a JSON object");
    MemoryFragment frag;
    frag.conversation_id = raw.value("conversation_id", "");
    frag.speaker = raw.value("speaker", "");

    if (!raw.contains("timestamp")) throw IngestError("timestamp", "missing field: timestamp");
    const auto& ts = raw.at("timestamp");
    if (ts.is_number_integer()) {
        frag.timestamp = ts.get<std::int64_t>();
    } else if (ts.is_string()) {
        const auto parsed = parse_timestamp(ts.get<std::string>());
        if (!parsed)
            throw IngestError("timestamp", "malformed timestamp: \"" + ts.get<std::string>() +
                                               "\" (expected epoch seconds or RFC 3339)");
        frag.timestamp = *parsed;
    } else {
        throw IngestError("timestamp", "timestamp must be epoch seconds or an RFC 3339 string");
    }
    if (frag.timestamp <= 0) throw IngestError("timestamp", "timestamp must be positive");

    if (!raw.contains("text") || !raw.at("text").is_string())
        throw IngestError("text", "missing or non-string field: text");
    frag.text = raw.at("text").get<std::string>();
    if (text::trim(frag.text).empty()) throw IngestError("text", "text is empty after trimming");

    if (raw.contains("meta") && raw.at("meta").is_object())
        for (const auto& [k, v] : raw.at("meta").items())
            frag.source_meta[k] = v.is_string() ? v.get<std::string>() : v.dump();

    const std::string key = frag.conversation_id + "\x1f" + frag.speaker + "\x1f" +
                            std::to_string(frag.timestamp) + "\x1f" + frag.text;
    if (auto it = fragment_by_key_.find(key); it != fragment_by_key_.end())
        return {fragment(it->second), false};

    frag.id = new_fragment_id();
    fragment_by_key_[key] = frag.id;
    fragment_by_id_[frag.id] = fragments_.size();
    fragments_.push_back(std::move(frag));
    return {&fragments_.back(), true};
}

const MemoryFragment* MemoryStore::fragment(const std::string& id) const {
    auto it = fragment_by_id_.find(id);
    return it == fragment_by_id_.end() ? nullptr : &fragments_[it->second];
}

void MemoryStore::set_fragment_embedding(const std::string& id, std::int32_t embedding_id) {
    auto it = fragment_by_id_.find(id);
    if (it == fragment_by_id_.end()) throw std::out_of_range("unknown fragment: " + id);
    fragments_[it->second].embedding_id = embedding_id;
}

const MemoryEvent& MemoryStore::add_event(MemoryEvent ev) {
    if (ev.frag_ids.empty()) throw std::invalid_argument("event must cite at least one fragment");
    for (const auto& fid : ev.frag_ids)
        if (!fragment(fid)) throw std::invalid_argument("event cites unknown fragment: " + fid);
    if (!ev.time_range.valid()) throw std::invalid_argument("event time range invalid");
    ev.id = new_event_id();
    if (ev.last_reinforced < ev.time_range.start) ev.last_reinforced = ev.time_range.start;
    const std::string norm = normalized_text_key(ev.event_text);
    event_by_id_[ev.id] = events_.size();
    if (!norm.empty() && !event_by_normtext_.count(norm)) event_by_normtext_[norm] = ev.id;
    for (const auto& fid : ev.frag_ids) events_by_fragment_[fid].push_back(ev.id);
    events_.push_back(std::move(ev));
    return events_.back();
}

const MemoryEvent* MemoryStore::event(const std::string& id) const {
    auto it = event_by_id_.find(id);
    return it == event_by_id_.end() ? nullptr : &events_[it->second];
}

const MemoryEvent* MemoryStore::find_event_by_normalized_text(const std::string& key) const {
    auto it = event_by_normtext_.find(key);
    return it == event_by_normtext_.end() ? nullptr : event(it->second);
}

void MemoryStore::reinforce_event(const std::string& id, UnixSeconds at, const std::string& frag_id) {
    auto it = event_by_id_.find(id);
    if (it == event_by_id_.end()) throw std::out_of_range("unknown event: " + id);
    MemoryEvent& ev = events_[it->second];
    ev.reinforcement_count += 1;
    ev.last_reinforced = std::max(ev.last_reinforced, at);
    if (!frag_id.empty() &&
        std::find(ev.frag_ids.begin(), ev.frag_ids.end(), frag_id) == ev.frag_ids.end()) {
        ev.frag_ids.push_back(frag_id);
        events_by_fragment_[frag_id].push_back(id);
    }
}

void MemoryStore::reinforce_event_consolidated(const std::string& id, UnixSeconds at) {
    auto it = event_by_id_.find(id);
    if (it == event_by_id_.end()) throw std::out_of_range("unknown event: " + id);
    MemoryEvent& ev = events_[it->second];
    ev.reinforcement_count += 1;
    ev.last_reinforced = std::max(ev.last_reinforced, at);
}

void MemoryStore::set_event_embedding(const std::string& id, std::int32_t embedding_id) {
    auto it = event_by_id_.find(id);
    if (it == event_by_id_.end()) throw std::out_of_range("unknown event: " + id);
    events_[it->second].embedding_id = embedding_id;
}

std::vector<std::string> MemoryStore::event_ids_for_fragment(const std::string& frag_id) const {
    auto it = events_by_fragment_.find(frag_id);
    return it == events_by_fragment_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<const MemoryFragment*> MemoryStore::prior_neighbors(const std::string& frag_id, int n) const {
    auto it = fragment_by_id_.find(frag_id);
    if (it == fragment_by_id_.end()) return {};
    const std::string& conversation = fragments_[it->second].conversation_id;
    std::vector<const MemoryFragment*> out;
    for (std::size_t i = it->second; i > 0 && static_cast<int>(out.size()) < n;) {
        --i;
        if (fragments_[i].conversation_id == conversation) out.push_back(&fragments_[i]);
    }
    std::reverse(out.begin(), out.end());  // oldest first
    return out;
}

std::optional<UnixSeconds> MemoryStore::min_fragment_ts() const {
    std::optional<UnixSeconds> out;
    for (const auto& f : fragments_)
        if (!out || f.timestamp < *out) out = f.timestamp;
    return out;
}

std::optional<UnixSeconds> MemoryStore::max_fragment_ts() const {
    std::optional<UnixSeconds> out;
    for (const auto& f : fragments_)
        if (!out || f.timestamp > *out) out = f.timestamp;
    return out;
}

double MemoryStore::history_age_days() const {
    const auto lo = min_fragment_ts();
    const auto hi = max_fragment_ts();
    if (!lo || !hi) return 0.0;
    return static_cast<double>(*hi - *lo) / 86400.0;
}

json MemoryStore::dump_fragments() const {
    json arr = json::array();
    for (const auto& f : fragments_) {
        arr.push_back({
            {"id", f.id},
            {"conversation_id", f.conversation_id},
            {"speaker", f.speaker},
            {"timestamp", f.timestamp},
            {"text", f.text},
            {"source_meta", f.source_meta},
            {"embedding_id", f.embedding_id},
        });
    }
    return arr;
}

json MemoryStore::dump_events() const {
    json arr = json::array();
    for (const auto& e : events_) {
        arr.push_back({
            {"id", e.id},
            {"event_text", e.event_text},
            {"frag_ids", e.frag_ids},
            {"time_range", {e.time_range.start, e.time_range.end}},
            {"event_type", event_type_name(e.event_type)},
            {"participants", e.participants},
            {"reinforcement_count", e.reinforcement_count},
            {"last_reinforced", e.last_reinforced},
            {"embedding_id", e.embedding_id},
        });
    }
    return arr;
}

void MemoryStore::load_fragments(const json& arr) {
    std::int64_t max_id = 0;
    for (const auto& jf : arr) {
        MemoryFragment f;
        f.id = jf.at("id").get<std::string>();
        f.conversation_id = jf.value("conversation_id", "");
        f.speaker = jf.value("speaker", "");
        f.timestamp = jf.at("timestamp").get<std::int64_t>();
        f.text = jf.at("text").get<std::string>();
        if (jf.contains("source_meta"))
            for (const auto& [k, v] : jf.at("source_meta").items()) f.source_meta[k] = v.get<std::string>();
        f.embedding_id = jf.value("embedding_id", -1);
        if (f.id.size() > 1) max_id = std::max<std::int64_t>(max_id, std::strtoll(f.id.c_str() + 1, nullptr, 10));
        const std::string key = f.conversation_id + "\x1f" + f.speaker + "\x1f" +
                                std::to_string(f.timestamp) + "\x1f" + f.text;
        fragment_by_key_[key] = f.id;
        fragment_by_id_[f.id] = fragments_.size();
        fragments_.push_back(std::move(f));
    }
    next_fragment_ = max_id + 1;
}

void MemoryStore::load_events(const json& arr) {
    std::int64_t max_id = 0;
    for (const auto& je : arr) {
        MemoryEvent e;
        e.id = je.at("id").get<std::string>();
        e.event_text = je.at("event_text").get<std::string>();
        e.frag_ids = je.at("frag_ids").get<std::vector<std::string>>();
        e.time_range = {je.at("time_range")[0].get<std::int64_t>(), je.at("time_range")[1].get<std::int64_t>()};
        e.event_type = event_type_from_name(je.value("event_type", "other"));
        e.participants = je.value("participants", std::vector<std::string>{});
        e.reinforcement_count = je.value("reinforcement_count", static_cast<std::int64_t>(0));
        e.last_reinforced = je.value("last_reinforced", static_cast<std::int64_t>(0));
        e.embedding_id = je.value("embedding_id", -1);
        if (e.id.size() > 2) max_id = std::max<std::int64_t>(max_id, std::strtoll(e.id.c_str() + 2, nullptr, 10));
        const std::string norm = normalized_text_key(e.event_text);
        event_by_id_[e.id] = events_.size();
        if (!norm.empty() && !event_by_normtext_.count(norm)) event_by_normtext_[norm] = e.id;
        for (const auto& fid : e.frag_ids) events_by_fragment_[fid].push_back(e.id);
        events_.push_back(std::move(e));
    }
    next_event_ = max_id + 1;
}

}  // namespace engram
