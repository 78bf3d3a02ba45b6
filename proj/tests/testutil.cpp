#include "testutil.hpp"

#include <filesystem>
#include <sstream>

namespace engram::testutil {

namespace fs = std::filesystem;
using nlohmann::json;

EngineConfig mock_config(int embedding_dim) {
    EngineConfig cfg;
    cfg.embedding_dim = embedding_dim;
    cfg.provider.mode = ProviderMode::mock;
    return cfg;
}

ChatResponse ScriptedChatProvider::chat(const ChatRequest& req, CostStage stage) {
    const std::size_t idx = static_cast<std::size_t>(calls++);
    const Step step = idx < steps_.size() ? steps_[idx] : Step{Step::Kind::transport_error, ""};
    ledger_.add({stage, approx_tokens(req.system_prompt) + approx_tokens(req.user_payload),
                 approx_tokens(step.text), 0, 1});
    switch (step.kind) {
        case Step::Kind::reply: return {step.text, 0, 0};
        case Step::Kind::garbage: {
            if (req.json_mode)
                throw StructuredOutputError("scripted structured-output failure", step.text);
            return {step.text, 0, 0};
        }
        case Step::Kind::transport_error: throw TransportError("scripted transport failure");
    }
    throw TransportError("unreachable");
}

namespace {

json record(const std::string& conversation, const std::string& speaker, const std::string& ts,
            const std::string& text, const std::string& session = "") {
    json r = {{"conversation_id", conversation}, {"speaker", speaker}, {"timestamp", ts}, {"text", text}};
    if (!session.empty()) r["meta"] = {{"session", session}};
    return r;
}

}  // namespace

std::vector<json> three_session_records() {
    return {
        // Session 1: 2023-05-01
        record("alpha", "A", "2023-05-01T10:00:00Z", "Caroline painted sunsets at the beach on Monday.", "s1"),
        record("alpha", "B", "2023-05-01T10:05:00Z", "Melanie said she painted sunsets over the lake.", "s1"),
        record("alpha", "A", "2023-05-01T10:10:00Z", "Caroline adopted a cat named Milo.", "s1"),
        record("alpha", "B", "2023-05-01T10:15:00Z", "Melanie plays tennis with her brother Jake every weekend.",
               "s1"),
        // Session 2: 2023-05-09
        record("alpha", "A", "2023-05-09T09:00:00Z", "Caroline painted sunsets at the beach on Monday.", "s2"),
        record("alpha", "A", "2023-05-09T09:05:00Z", "Caroline moved to Lisbon for a new design job.", "s2"),
        record("alpha", "B", "2023-05-09T09:10:00Z", "Jake won the city tennis tournament in May 2023.", "s2"),
        record("alpha", "B", "2023-05-09T09:15:00Z", "Melanie visited Caroline in Lisbon last week.", "s2"),
        // Session 3: 2023-06-10
        record("alpha", "A", "2023-06-10T15:00:00Z", "Caroline painted sunsets at the beach on Monday.", "s3"),
        record("alpha", "A", "2023-06-10T15:05:00Z", "Caroline hosted a gallery show in Lisbon.", "s3"),
        record("alpha", "B", "2023-06-10T15:10:00Z", "Milo the cat knocked over a paint jar.", "s3"),
        record("alpha", "A", "2023-06-10T15:15:00Z", "Dr. John Smith examined Milo at the clinic.", "s3"),
        record("alpha", "B", "2023-06-10T15:20:00Z", "John Smith said Milo is healthy.", "s3"),
    };
}

std::vector<json> bridge_records() {
    return {
        record("beta", "Tim", "2023-06-01T10:00:00Z", "Tim enjoys playing tunes on the piano in the evening."),
        record("beta", "Tim", "2023-06-02T10:00:00Z",
               "Tim often plays the main theme from his favorite movie on the piano."),
        record("beta", "Tim", "2023-06-03T10:00:00Z", "Tim practices the piano every Sunday evening."),
        record("beta", "Anna", "2023-06-20T09:00:00Z",
               "John Williams, a popular music composer, wrote that main movie theme."),
        record("beta", "Anna", "2023-06-21T09:00:00Z", "Anna visited a museum in Rome last month."),
    };
}

std::vector<json> tree_corpus_records() {
    // Eight topic templates; {n} keeps every claim unique so nothing
    // reinforces away.
    const std::vector<std::string> templates = {
        "Sam planted tomato seedlings in garden bed number {n}.",
        "Riley practiced violin scales for the spring recital session {n}.",
        "Noah debugged the payment service incident ticket {n}.",
        "Priya baked sourdough bread loaf number {n} on the weekend.",
        "Lena photographed herons at the river delta on outing {n}.",
        "Omar studied organic chemistry chapter {n} for the exam.",
        "Maya repaired the old sailboat hull panel {n} at the marina.",
        "Felix catalogued meteor observations log entry {n} at the observatory.",
    };
    const UnixSeconds base = 1677661200;  // 2023-03-01T09:00:00Z
    const UnixSeconds step = (90LL * 86400) / 200;
    std::vector<json> records;
    records.reserve(200);
    for (int i = 0; i < 200; ++i) {
        std::string text = templates[static_cast<std::size_t>(i) % templates.size()];
        const std::string marker = "{n}";
        text.replace(text.find(marker), marker.size(), std::to_string(i / 8 + 1));
        json r = {{"conversation_id", "tree"},
                  {"speaker", i % 2 == 0 ? "A" : "B"},
                  {"timestamp", base + step * i},
                  {"text", text}};
        records.push_back(std::move(r));
    }
    return records;
}

Dataset mock_dataset() {
    json j;
    json convs = json::array();
    json alpha = {{"id", "alpha"}, {"fragments", json::array()}};
    for (const auto& r : three_session_records()) alpha["fragments"].push_back(r);
    json beta = {{"id", "beta"}, {"fragments", json::array()}};
    for (const auto& r : bridge_records()) beta["fragments"].push_back(r);
    convs.push_back(alpha);
    convs.push_back(beta);
    j["conversations"] = convs;
    j["questions"] = json::array({
        {{"question", "What subject have Caroline and Melanie both painted?"},
         {"gold_answer", "sunsets"},
         {"category", "multi-hop"},
         {"conversation_id", "alpha"},
         {"question_time", 1688169600}},
        {{"question", "Who adopted a cat named Milo?"},
         {"gold_answer", "Caroline"},
         {"category", "single-hop"},
         {"conversation_id", "alpha"},
         {"question_time", 1688169600}},
        {{"question", "Where did Caroline move for her new design job?"},
         {"gold_answer", "Lisbon"},
         {"category", "single-hop"},
         {"conversation_id", "alpha"},
         {"question_time", 1688169600}},
        {{"question", "When did Jake win the city tennis tournament?"},
         {"gold_answer", "May 2023"},
         {"category", "temporal"},
         {"conversation_id", "alpha"},
         {"question_time", 1688169600}},
        {{"question", "How many times did Caroline paint sunsets?"},
         {"gold_answer", "three times"},
         {"category", "open-domain"},
         {"conversation_id", "alpha"},
         {"question_time", 1688169600}},
        {{"question", "Which popular music composer's tunes does Tim enjoy playing on the piano?"},
         {"gold_answer", "John Williams"},
         {"category", "multi-hop"},
         {"conversation_id", "beta"},
         {"question_time", 1688169600}},
    });
    return Dataset::from_json(j);
}

std::string ingest_lines(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) out += r.dump() + "\n";
    return out;
}

std::unique_ptr<MemoryEngine> build_engine(const std::vector<json>& records, EngineConfig cfg) {
    auto engine = std::make_unique<MemoryEngine>(std::move(cfg));
    std::istringstream in(ingest_lines(records));
    engine->ingest_jsonl(in);
    return engine;
}

TempDir::TempDir(const std::string& label) {
    path_ = (fs::temp_directory_path() / ("engram-test-" + label)).string();
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

}  // namespace engram::testutil
