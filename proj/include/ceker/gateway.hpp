#pragma once

#include "ceker/config.hpp"
#include "ceker/util.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ceker {

enum class BackendMode { Live, Replay, Mock };

BackendMode backend_mode_from_name(const std::string& name);
const char* backend_mode_name(BackendMode mode);

struct BackendConfig {
    BackendMode mode = BackendMode::Mock;
    std::string endpoint;  // live only, e.g. "https://api.openai.com"
    std::string model = "gpt-4o";
    double temperature = 0.0;
    std::int64_t seed = 0;
    std::int64_t request_timeout = 30;  // seconds
    std::int64_t max_retries = 2;
    std::int64_t requests_per_minute = 0;  // 0 = unlimited (live dispatch only)
    std::int64_t message_char_cap = 500000;  // 0 = unlimited
    std::string transcript_dir;     // replay source; live/mock recording sink
    std::string mock_rules_path;    // mock only
    std::string capture_requests;   // optional JSONL capture of outgoing requests

    static BackendConfig from_config(const CekerConfig& config);
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

// One conversation context. Fresh per open_session; messages strictly
// alternate user/assistant after the optional leading system message.
struct Session {
    std::string session_id;
    std::string purpose_tag;  // e.g. "extract:paper-07", "analyze:P-1"
    std::vector<ChatMessage> messages;

    // Appends an already-completed exchange without contacting the backend.
    // Used when resuming: earlier replies are replayed from the store to
    // rebuild the exact session history.
    void push_exchange(const std::string& user_message, const std::string& assistant_reply);
};

struct LlmResponse {
    std::string text;
    std::string finish_reason;
    std::string request_digest;
    bool cached = false;
};

struct Transcript {
    struct Entry {
        std::string request_digest;
        std::string response;
    };
    std::string purpose_tag;
    std::vector<Entry> entries;
};

Transcript load_transcript(const fs::path& path, const std::string& purpose_tag);

// transcripts/<purpose_tag>.jsonl with characters outside [A-Za-z0-9._-]
// replaced by '_' ("analyze:P-5" -> "analyze_P-5.jsonl").
std::string transcript_file_name(const std::string& purpose_tag);

// Canonical request serialization: UTF-8 JSON, sorted keys, no insignificant
// whitespace, fields {model, temperature, seed, messages}. Credentials and
// endpoint are deliberately excluded.
std::string canonical_request(const BackendConfig& config,
                              const std::vector<ChatMessage>& history,
                              const std::string& new_message);

// SHA-256 of canonical_request; the replay key and cache key.
std::string cache_key(const BackendConfig& config, const std::vector<ChatMessage>& history,
                      const std::string& new_message);

// Sliding-window rate limit bookkeeping. Prunes entries older than one minute;
// either records `now` as a dispatch and returns zero, or returns how long the
// caller must wait before asking again. Pure given its inputs.
std::chrono::milliseconds rate_limit_wait(
    std::vector<std::chrono::steady_clock::time_point>& window,
    std::chrono::steady_clock::time_point now, std::int64_t per_minute);

// Document framing for the chat wire protocol (no uploads): the document is
// inlined into the first user message under this header.
std::string frame_document(const std::string& name, const std::string& content);

class Gateway {
public:
    explicit Gateway(BackendConfig config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    const BackendConfig& config() const { return config_; }

    // Fresh, empty-history session. Replay mode requires the purpose_tag's
    // transcript file to exist.
    Session open_session(const std::string& purpose_tag);

    // Sends one user message, appends the exchange to the session history.
    LlmResponse send(Session& session, const std::string& message);

private:
    struct MockRule {
        std::string contains;
        std::string response;
    };

    std::string dispatch(const Session& session, const std::string& message,
                         const std::string& digest, const std::string& canonical,
                         std::string& finish_reason);
    std::string send_live(const std::string& canonical, std::string& finish_reason);
    std::string send_replay(const Session& session, const std::string& digest);
    std::string send_mock(const std::string& message, const std::string& digest);
    void record_transcript(const std::string& purpose_tag, const std::string& digest,
                           const std::string& response);
    void capture(const std::string& purpose_tag, const std::string& canonical);
    void rate_limit_live();

    BackendConfig config_;
    std::vector<MockRule> mock_rules_;
    std::mutex mutex_;
    int next_session_ = 1;
    std::unordered_map<std::string, std::string> cache_;  // digest -> response text
    std::unordered_map<std::string, std::string> cache_finish_;
    std::map<std::string, std::unordered_map<std::string, std::string>> replay_;  // tag -> digest -> text
    std::map<std::string, std::unordered_set<std::string>> recorded_;  // tag -> digests on disk
    std::vector<std::chrono::steady_clock::time_point> live_dispatch_times_;
};

} // namespace ceker
