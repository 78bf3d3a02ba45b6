#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

#include "engram/http_provider.hpp"
#include "engram/mock_provider.hpp"
#include "engram/providers.hpp"
#include "testutil.hpp"

using namespace engram;
using nlohmann::json;

TEST_CASE("mock embeddings are deterministic, pure, and unit-normalized") {
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(4);
    MockEmbeddingProvider a(256, 42, ledger, gate);
    MockEmbeddingProvider b(256, 42, ledger, gate);

    const auto va = a.embed({"a"}, CostStage::index);
    const auto vb = b.embed({"a"}, CostStage::index);
    CHECK(va[0].values == vb[0].values);  // identical across instances/runs

    const auto pair = a.embed({"a", "a"}, CostStage::index);
    CHECK(pair[0].values == pair[1].values);  // purity

    const auto ab = a.embed({"a", "b"}, CostStage::index);
    const double cos = cosine(ab[0], ab[1]);
    CHECK(cos >= -1.0 - 1e-9);
    CHECK(cos <= 1.0 + 1e-9);
    CHECK(cosine(ab[0], ab[0]) == doctest::Approx(1.0).epsilon(1e-6));

    // Different seeds give different vectors.
    MockEmbeddingProvider c(256, 43, ledger, gate);
    CHECK(c.embed({"a"}, CostStage::index)[0].values != va[0].values);

    // Lexical overlap is reflected in similarity.
    const auto texts = a.embed({"the quick brown fox", "the quick brown wolf", "quantum flux manifold"},
                               CostStage::index);
    CHECK(cosine(texts[0], texts[1]) > cosine(texts[0], texts[2]));

    CHECK_THROWS_AS(a.embed({}, CostStage::index), ProviderError);
    CHECK_THROWS_AS(a.embed({""}, CostStage::index), ProviderError);
}

TEST_CASE("mock chat answers the extraction prompt with rule-generated JSON") {
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(4);
    MockChatProvider chat(ledger, gate);

    json input = {{"fragment",
                   {{"id", "f1"}, {"text", "I adopted a cat named Milo. The vet visit is Friday."},
                    {"timestamp", 1683453600}, {"speaker", "A"}}},
                  {"neighbors", json::array()}};
    ChatRequest req;
    req.system_prompt = PromptCatalog::builtin().extraction;
    req.user_payload = "Input JSON:\n" + input.dump();
    req.json_mode = true;
    const auto resp = chat.chat(req, CostStage::index);
    const json parsed = json::parse(resp.text);
    REQUIRE(parsed.contains("events"));
    CHECK(parsed["events"].size() == 2);  // one per sentence
    CHECK(parsed["events"][0]["event_type"] == "fact");
    CHECK(parsed["events"][0]["frag_ids"][0] == "f1");

    // Byte-identical across calls.
    const auto resp2 = chat.chat(req, CostStage::index);
    CHECK(resp.text == resp2.text);
    CHECK(ledger.size() == 2);
}

TEST_CASE("every provider call appends exactly one ledger record; totals reconcile") {
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(4);
    MockEmbeddingProvider embed(64, 1, ledger, gate);
    MockChatProvider chat(ledger, gate);

    embed.embed({"one", "two"}, CostStage::index);
    ChatRequest req;
    req.system_prompt = PromptCatalog::builtin().reasoner;
    req.user_payload = "Input JSON:\n{}";
    chat.chat(req, CostStage::generate);
    CHECK(ledger.size() == 2);

    std::int64_t prompt_sum = 0;
    for (const auto& rec : ledger.snapshot()) prompt_sum += rec.prompt_tokens;
    CHECK(ledger.grand_total().prompt_tokens == prompt_sum);
}

TEST_CASE("malformed endpoint URL is a configuration error before any call") {
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(1);
    ProviderConfig cfg;
    cfg.endpoint_url = "not a url";
    CHECK_THROWS_AS(HttpChatProvider(cfg, ledger, gate), ConfigurationError);
    cfg.endpoint_url = "ftp://example.com/v1";
    CHECK_THROWS_AS(HttpChatProvider(cfg, ledger, gate), ConfigurationError);
    CHECK(ledger.size() == 0);
}

namespace {

// Local OpenAI-compatible endpoint with scripted failures.
class LocalServer {
public:
    LocalServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++chat_calls_;
            if (n <= fail_first_) {
                res.status = 500;
                res.set_content("{\"error\":\"transient\"}", "application/json");
                return;
            }
            const json body = json::parse(req.body);
            last_model = body.value("model", "");
            const json reply = {
                {"choices", {{{"message", {{"role", "assistant"}, {"content", content_}}}}}},
                {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}}},
            };
            res.set_content(reply.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body);
            json data = json::array();
            int idx = 0;
            for (const auto& _ : body.at("input")) {
                (void)_;
                data.push_back({{"index", idx++}, {"embedding", {1.0, 0.0, 0.0, 0.0}}});
            }
            const json reply = {{"data", data}, {"usage", {{"prompt_tokens", 5}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    void fail_first(int n) { fail_first_ = n; }
    void set_content(std::string c) { content_ = std::move(c); }
    int chat_calls() const { return chat_calls_; }
    std::string last_model;

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> chat_calls_{0};
    int fail_first_ = 0;
    std::string content_ = "{\"ok\": true}";
};

ProviderConfig local_cfg(const LocalServer& server) {
    ProviderConfig cfg;
    cfg.mode = ProviderMode::live;
    cfg.endpoint_url = server.endpoint();
    cfg.retry_backoff_ms = 1;
    cfg.max_retries = 2;
    cfg.timeout_ms = 5000;
    return cfg;
}

}  // namespace

TEST_CASE("transient 5xx then success yields one response with call_count 2") {
    LocalServer server;
    server.fail_first(1);
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(2);
    HttpChatProvider chat(local_cfg(server), ledger, gate);

    ChatRequest req;
    req.system_prompt = "system";
    req.user_payload = "hello";
    const auto resp = chat.chat(req, CostStage::generate);
    CHECK(resp.text == "{\"ok\": true}");
    CHECK(resp.prompt_tokens == 7);
    CHECK(resp.completion_tokens == 3);
    REQUIRE(ledger.size() == 1);
    CHECK(ledger.snapshot()[0].call_count == 2);  // failed attempt + success
}

TEST_CASE("transport failure after the retry budget raises TransportError") {
    LocalServer server;
    server.fail_first(100);
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(2);
    HttpChatProvider chat(local_cfg(server), ledger, gate);
    ChatRequest req;
    req.user_payload = "hello";
    CHECK_THROWS_AS(chat.chat(req, CostStage::generate), TransportError);
    CHECK(server.chat_calls() == 3);  // initial + 2 retries
}

TEST_CASE("json_mode parse failure re-asks once then raises StructuredOutputError") {
    LocalServer server;
    server.set_content("this is not json");
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(2);
    HttpChatProvider chat(local_cfg(server), ledger, gate);
    ChatRequest req;
    req.user_payload = "hello";
    req.json_mode = true;
    try {
        chat.chat(req, CostStage::generate);
        FAIL("expected StructuredOutputError");
    } catch (const StructuredOutputError& e) {
        CHECK(e.raw_text == "this is not json");
    }
    CHECK(server.chat_calls() == 2);  // the single re-ask
}

TEST_CASE("http embeddings parse, normalize, and check dimensions") {
    LocalServer server;
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(2);
    HttpEmbeddingProvider embed(local_cfg(server), 4, ledger, gate);
    const auto vecs = embed.embed({"x", "y"}, CostStage::index);
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0].dim() == 4);
    CHECK(cosine(vecs[0], vecs[1]) == doctest::Approx(1.0));

    HttpEmbeddingProvider wrong_dim(local_cfg(server), 8, ledger, gate);
    CHECK_THROWS_AS(wrong_dim.embed({"x"}, CostStage::index), ProviderError);
}

TEST_CASE("pass-through reranker scores by cosine; ties keep input order") {
    CostLedger ledger;
    auto gate = std::make_shared<CallGate>(4);
    MockEmbeddingProvider embed(128, 42, ledger, gate);
    PassthroughReranker rerank(embed, ledger);

    SUBCASE("single candidate") {
        const auto out = rerank.rerank("query text", {"only one"}, CostStage::retrieve);
        REQUIRE(out.size() == 1);
        CHECK(out[0].index == 0);
    }
    SUBCASE("scores equal independently computed cosines") {
        const std::vector<std::string> cands = {"sunny beach painting", "tax return forms"};
        const auto out = rerank.rerank("beach painting", cands, CostStage::retrieve);
        const auto vecs = embed.embed({"beach painting", cands[0], cands[1]}, CostStage::retrieve);
        for (const auto& entry : out)
            CHECK(entry.score ==
                  doctest::Approx(cosine(vecs[0], vecs[static_cast<std::size_t>(entry.index) + 1])));
        CHECK(out[0].score >= out[1].score);
        CHECK(out[0].index == 0);  // beach painting candidate wins
    }
    SUBCASE("exact ties preserve input order") {
        const auto out = rerank.rerank("anything", {"same text", "same text"}, CostStage::retrieve);
        CHECK(out[0].index == 0);
        CHECK(out[1].index == 1);
    }
}

TEST_CASE("make_providers wires mock and live stacks") {
    CostLedger ledger;
    auto cfg = testutil::mock_config();
    const auto set = make_providers(cfg, ledger);
    CHECK(set.chat != nullptr);
    CHECK(set.embeddings->dim() == cfg.embedding_dim);
    CHECK(set.reranker != nullptr);

    EngineConfig live = cfg;
    live.provider.mode = ProviderMode::live;
    live.provider.endpoint_url = "nonsense";
    CHECK_THROWS_AS(make_providers(live, ledger), std::invalid_argument);
}
