#include "ceker/digest.hpp"
#include "ceker/errors.hpp"
#include "ceker/gateway.hpp"

#include "oracles.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <thread>

using namespace ceker;
using nlohmann::json;

namespace {

fs::path write_mock_rules(const fs::path& dir, const std::string& rules_json) {
    fs::path path = dir / "rules.json";
    std::ofstream out(path);
    out << rules_json;
    return path;
}

BackendConfig mock_config(const fs::path& dir, const std::string& rules_json = R"([
    {"contains": "hello", "response": "greeting [{{DIGEST8}}]"},
    {"contains": "", "response": "fallback"}
])") {
    BackendConfig config;
    config.mode = BackendMode::Mock;
    config.model = "test-model";
    config.mock_rules_path = write_mock_rules(dir, rules_json).string();
    return config;
}

} // namespace

TEST_CASE("canonical request shape and digest") {
    BackendConfig config;
    config.model = "m";
    config.temperature = 0.0;
    config.seed = 0;
    std::string canonical = canonical_request(config, {}, "hello");
    CHECK(canonical ==
          R"({"messages":[{"content":"hello","role":"user"}],"model":"m","seed":0,"temperature":0.0})");
    CHECK(cache_key(config, {}, "hello") == sha256_hex(canonical));
    CHECK(cache_key(config, {}, "hello") == oracles::sha256_hex_reference(canonical));

    SUBCASE("temperature participates in the key") {
        BackendConfig warm = config;
        warm.temperature = 0.1;
        CHECK(cache_key(warm, {}, "hello") != cache_key(config, {}, "hello"));
    }
    SUBCASE("seed participates in the key") {
        BackendConfig seeded = config;
        seeded.seed = 1;
        CHECK(cache_key(seeded, {}, "hello") != cache_key(config, {}, "hello"));
    }
    SUBCASE("history participates in the key") {
        std::vector<ChatMessage> history{{"user", "a"}, {"assistant", "b"}};
        CHECK(cache_key(config, history, "hello") != cache_key(config, {}, "hello"));
    }
    SUBCASE("endpoint and credentials do not participate") {
        BackendConfig other = config;
        other.endpoint = "https://somewhere.example";
        CHECK(cache_key(other, {}, "hello") == cache_key(config, {}, "hello"));
    }
}

TEST_CASE("transcript naming rule") {
    CHECK(transcript_file_name("analyze:P-5") == "analyze_P-5.jsonl");
    CHECK(transcript_file_name("extract:paper-07") == "extract_paper-07.jsonl");
    CHECK(transcript_file_name("a b/c") == "a_b_c.jsonl");
}

TEST_CASE("sessions are isolated and alternate strictly") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    Gateway gateway(mock_config(dir));

    Session a = gateway.open_session("extract:paper-01");
    Session b = gateway.open_session("extract:paper-02");
    CHECK(a.session_id != b.session_id);
    CHECK(a.messages.empty());
    CHECK(b.messages.empty());

    gateway.send(a, "hello there");
    CHECK(a.messages.size() == 2);
    CHECK(a.messages[0].role == "user");
    CHECK(a.messages[1].role == "assistant");
    CHECK(b.messages.empty());
    fs::remove_all(dir);
}

TEST_CASE("mock rules match in order and expand templates deterministically") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    Gateway gateway(mock_config(dir, R"([
        {"contains": "score me", "response": "value: {{SCORE:0}} tag {{DIGEST8}}"},
        {"contains": "", "response": "fallback"}
    ])"));
    Session s = gateway.open_session("t");
    LlmResponse first = gateway.send(s, "please score me now");

    Session s2 = gateway.open_session("t");
    LlmResponse again = gateway.send(s2, "please score me now");
    CHECK(first.text == again.text);
    CHECK(first.text.find(first.request_digest.substr(0, 8)) != std::string::npos);

    Session s3 = gateway.open_session("t");
    CHECK(gateway.send(s3, "unmatched message").text == "fallback");
    fs::remove_all(dir);
}

TEST_CASE("identical requests are served from cache byte-identically") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    Gateway gateway(mock_config(dir));

    Session a = gateway.open_session("t");
    LlmResponse first = gateway.send(a, "hello cache");
    Session b = gateway.open_session("t");
    LlmResponse second = gateway.send(b, "hello cache");

    CHECK_FALSE(first.cached);
    CHECK(second.cached);
    CHECK(first.text == second.text);
    CHECK(first.request_digest == second.request_digest);
    fs::remove_all(dir);
}

TEST_CASE("a session with a dangling user message refuses further sends") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    Gateway gateway(mock_config(dir));
    Session s = gateway.open_session("t");
    s.messages.push_back({"user", "unanswered"});
    CHECK_THROWS_AS(gateway.send(s, "next"), ceker::Error);
    fs::remove_all(dir);
}

TEST_CASE("empty and oversized messages are rejected") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    BackendConfig config = mock_config(dir);
    config.message_char_cap = 16;
    Gateway gateway(config);
    Session s = gateway.open_session("t");
    CHECK_THROWS_AS(gateway.send(s, ""), ceker::Error);
    try {
        gateway.send(s, std::string(64, 'x'));
        FAIL("expected TooLarge");
    } catch (const ceker::Error& e) {
        CHECK(e.code() == ErrorCode::TooLarge);
    }
    fs::remove_all(dir);
}

TEST_CASE("mock runs record transcripts that replay exactly") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    fs::path transcripts = dir / "transcripts";

    BackendConfig recording = mock_config(dir);
    recording.transcript_dir = transcripts.string();
    std::string recorded_digest;
    std::string recorded_text;
    {
        Gateway gateway(recording);
        Session s = gateway.open_session("extract:paper-01");
        LlmResponse r = gateway.send(s, "hello transcript");
        recorded_digest = r.request_digest;
        recorded_text = r.text;
        LlmResponse r2 = gateway.send(s, "second message");
        CHECK_FALSE(r2.request_digest == recorded_digest);
    }

    Transcript t = load_transcript(transcripts / "extract_paper-01.jsonl", "extract:paper-01");
    REQUIRE(t.entries.size() == 2);
    CHECK(t.entries[0].request_digest == recorded_digest);  // entry order = request order
    CHECK(t.entries[0].response == recorded_text);

    SUBCASE("replay serves by digest, not position") {
        BackendConfig replay;
        replay.mode = BackendMode::Replay;
        replay.model = "test-model";
        replay.transcript_dir = transcripts.string();
        Gateway gateway(replay);
        Session s = gateway.open_session("extract:paper-01");
        LlmResponse r = gateway.send(s, "hello transcript");
        CHECK(r.text == recorded_text);
        CHECK_FALSE(r.cached);
    }

    SUBCASE("replay misses raise ReplayMiss, never fall through") {
        BackendConfig replay;
        replay.mode = BackendMode::Replay;
        replay.model = "test-model";
        replay.transcript_dir = transcripts.string();
        Gateway gateway(replay);
        Session s = gateway.open_session("extract:paper-01");
        try {
            gateway.send(s, "drifted prompt");
            FAIL("expected ReplayMiss");
        } catch (const ceker::Error& e) {
            CHECK(e.code() == ErrorCode::ReplayMiss);
        }
    }

    SUBCASE("replay with a missing transcript dir raises MissingTranscript") {
        BackendConfig replay;
        replay.mode = BackendMode::Replay;
        replay.transcript_dir = (dir / "nope").string();
        CHECK_THROWS_AS(Gateway{replay}, ceker::Error);
    }

    SUBCASE("replay with a missing purpose-tag file raises MissingTranscript") {
        BackendConfig replay;
        replay.mode = BackendMode::Replay;
        replay.model = "test-model";
        replay.transcript_dir = transcripts.string();
        Gateway gateway(replay);
        try {
            gateway.open_session("analyze:P-9");
            FAIL("expected MissingTranscript");
        } catch (const ceker::Error& e) {
            CHECK(e.code() == ErrorCode::MissingTranscript);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("replay determinism across gateway instances") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    fs::path transcripts = dir / "transcripts";
    BackendConfig recording = mock_config(dir);
    recording.transcript_dir = transcripts.string();
    {
        Gateway gateway(recording);
        Session s = gateway.open_session("t");
        gateway.send(s, "hello a");
        gateway.send(s, "hello b");
    }
    BackendConfig replay;
    replay.mode = BackendMode::Replay;
    replay.model = "test-model";
    replay.transcript_dir = transcripts.string();

    std::vector<std::string> first;
    for (int round = 0; round < 2; ++round) {
        Gateway gateway(replay);
        Session s = gateway.open_session("t");
        std::vector<std::string> texts;
        texts.push_back(gateway.send(s, "hello a").text);
        texts.push_back(gateway.send(s, "hello b").text);
        if (round == 0) {
            first = texts;
        } else {
            CHECK(first == texts);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("live backend: golden request, retries, at-most-once transcript") {
    setenv("CEKER_API_KEY", "test-key-123", 1);

    httplib::Server server;
    std::mutex seen_mutex;
    std::vector<std::string> bodies;
    std::vector<std::string> auth_headers;
    int fail_first = 0;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    {
                        std::lock_guard<std::mutex> lock(seen_mutex);
                        bodies.push_back(req.body);
                        auth_headers.push_back(req.get_header_value("Authorization"));
                        if (fail_first > 0) {
                            --fail_first;
                            res.status = 500;
                            res.set_content("transient", "text/plain");
                            return;
                        }
                    }
                    json reply = {
                        {"choices",
                         json::array({{{"message", {{"role", "assistant"}, {"content", "ok"}}},
                                       {"finish_reason", "stop"}}})}};
                    res.set_content(reply.dump(), "application/json");
                });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    fs::path dir = oracles::make_temp_dir("ceker-live");
    BackendConfig config;
    config.mode = BackendMode::Live;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port);
    config.model = "m";
    config.temperature = 0.0;
    config.seed = 0;
    config.max_retries = 2;
    config.transcript_dir = (dir / "transcripts").string();

    SUBCASE("request body matches the frozen golden wire format") {
        Gateway gateway(config);
        Session s = gateway.open_session("t");
        LlmResponse r = gateway.send(s, "hello");
        CHECK(r.text == "ok");
        CHECK(r.finish_reason == "stop");
        REQUIRE(bodies.size() == 1);
        CHECK(bodies[0] ==
              R"({"messages":[{"content":"hello","role":"user"}],"model":"m","seed":0,"temperature":0.0})");
        CHECK(auth_headers[0] == "Bearer test-key-123");
        json parsed = json::parse(bodies[0]);
        CHECK(parsed["model"] == "m");
        CHECK(parsed["messages"].size() == 1);
    }

    SUBCASE("a transient 500 is retried and the transcript gets one entry") {
        fail_first = 1;
        Gateway gateway(config);
        Session s = gateway.open_session("t");
        LlmResponse r = gateway.send(s, "hello");
        CHECK(r.text == "ok");
        CHECK(bodies.size() == 2);  // failed + retried
        Transcript t = load_transcript(fs::path(config.transcript_dir) / "t.jsonl", "t");
        CHECK(t.entries.size() == 1);
    }

    SUBCASE("persistent 500s raise HttpError after max_retries") {
        fail_first = 100;
        Gateway gateway(config);
        Session s = gateway.open_session("t");
        try {
            gateway.send(s, "hello");
            FAIL("expected HttpError");
        } catch (const ceker::Error& e) {
            CHECK(e.code() == ErrorCode::HttpError);
        }
        CHECK(bodies.size() == 3);  // initial + 2 retries
    }

    SUBCASE("session history is carried in full") {
        Gateway gateway(config);
        Session s = gateway.open_session("t");
        gateway.send(s, "first");
        gateway.send(s, "second");
        REQUIRE(bodies.size() == 2);
        json second = json::parse(bodies[1]);
        REQUIRE(second["messages"].size() == 3);
        CHECK(second["messages"][0]["content"] == "first");
        CHECK(second["messages"][1]["role"] == "assistant");
        CHECK(second["messages"][2]["content"] == "second");
    }

    server.stop();
    thread.join();
    fs::remove_all(dir);
}

TEST_CASE("live mode without a credential is MissingCredential") {
    unsetenv("CEKER_API_KEY");
    BackendConfig config;
    config.mode = BackendMode::Live;
    config.endpoint = "http://127.0.0.1:9";
    try {
        Gateway gateway(config);
        FAIL("expected MissingCredential");
    } catch (const ceker::Error& e) {
        CHECK(e.code() == ErrorCode::MissingCredential);
    }
    setenv("CEKER_API_KEY", "restored", 1);
}

TEST_CASE("request capture logs purpose tags and canonical requests") {
    fs::path dir = oracles::make_temp_dir("ceker-gw");
    BackendConfig config = mock_config(dir);
    config.capture_requests = (dir / "requests.jsonl").string();
    Gateway gateway(config);
    Session s = gateway.open_session("extract:paper-01");
    gateway.send(s, "hello capture");

    std::ifstream in(dir / "requests.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    json j = json::parse(line);
    CHECK(j["purpose_tag"] == "extract:paper-01");
    CHECK(json::parse(j["request"].get<std::string>())["messages"][0]["content"] ==
          "hello capture");
    fs::remove_all(dir);
}

TEST_CASE("rate limiter admits a burst then makes callers wait out the window") {
    using clock = std::chrono::steady_clock;
    std::vector<clock::time_point> window;
    clock::time_point t0 = clock::now();

    CHECK(rate_limit_wait(window, t0, 0).count() == 0);  // unlimited
    CHECK(window.empty());

    for (int i = 0; i < 3; ++i) {
        CHECK(rate_limit_wait(window, t0 + std::chrono::seconds(i), 3).count() == 0);
    }
    // fourth dispatch inside the window has to wait until the first expires
    auto wait = rate_limit_wait(window, t0 + std::chrono::seconds(3), 3);
    CHECK(wait.count() > 0);
    CHECK(wait <= std::chrono::seconds(60));
    // once the window has rolled past the oldest entry, dispatch proceeds
    CHECK(rate_limit_wait(window, t0 + std::chrono::seconds(61), 3).count() == 0);
}

TEST_CASE("document framing wraps content with begin and end markers") {
    std::string framed = frame_document("paper-01: Title", "body line\n");
    CHECK(framed ==
          "--- DOCUMENT: paper-01: Title ---\nbody line\n--- END DOCUMENT ---");
    std::string no_newline = frame_document("n", "body");
    CHECK(no_newline == "--- DOCUMENT: n ---\nbody\n--- END DOCUMENT ---");
}
