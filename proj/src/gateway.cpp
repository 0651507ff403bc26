#include "ceker/gateway.hpp"

#include "ceker/digest.hpp"
#include "ceker/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <thread>

namespace ceker {

using nlohmann::json;

BackendMode backend_mode_from_name(const std::string& name) {
    if (name == "live") return BackendMode::Live;
    if (name == "replay") return BackendMode::Replay;
    if (name == "mock") return BackendMode::Mock;
    raise(ErrorCode::InvalidConfig, "unknown backend mode: " + name);
}

const char* backend_mode_name(BackendMode mode) {
    switch (mode) {
        case BackendMode::Live: return "live";
        case BackendMode::Replay: return "replay";
        case BackendMode::Mock: return "mock";
    }
    return "mock";
}

BackendConfig BackendConfig::from_config(const CekerConfig& config) {
    BackendConfig b;
    b.mode = backend_mode_from_name(config.backend);
    b.endpoint = config.endpoint;
    b.model = config.model;
    b.temperature = config.temperature;
    b.seed = config.seed;
    b.request_timeout = config.request_timeout;
    b.max_retries = config.max_retries;
    b.requests_per_minute = config.requests_per_minute;
    b.message_char_cap = config.message_char_cap;
    b.transcript_dir = config.transcripts_dir;
    b.mock_rules_path = config.mock_rules;
    b.capture_requests = config.capture_requests;
    return b;
}

void Session::push_exchange(const std::string& user_message, const std::string& assistant_reply) {
    messages.push_back({"user", user_message});
    messages.push_back({"assistant", assistant_reply});
}

std::string transcript_file_name(const std::string& purpose_tag) {
    std::string name;
    for (char c : purpose_tag) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
        name += ok ? c : '_';
    }
    return name + ".jsonl";
}

Transcript load_transcript(const fs::path& path, const std::string& purpose_tag) {
    Transcript t;
    t.purpose_tag = purpose_tag;
    std::string content = read_file(path);
    std::size_t line_no = 0;
    for (const std::string& line : split_lines(content)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            t.entries.push_back({j.at("request_digest").get<std::string>(),
                                 j.at("response").get<std::string>()});
        } catch (const json::exception& e) {
            raise(ErrorCode::IoError, path.string() + " line " + std::to_string(line_no) +
                                          ": " + e.what());
        }
    }
    return t;
}

std::string canonical_request(const BackendConfig& config,
                              const std::vector<ChatMessage>& history,
                              const std::string& new_message) {
    json messages = json::array();
    for (const ChatMessage& m : history) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    messages.push_back({{"role", "user"}, {"content", new_message}});
    json body = {
        {"model", config.model},
        {"temperature", config.temperature},
        {"seed", config.seed},
        {"messages", messages},
    };
    return body.dump();  // nlohmann objects are key-sorted; dump() is compact
}

std::string cache_key(const BackendConfig& config, const std::vector<ChatMessage>& history,
                      const std::string& new_message) {
    return sha256_hex(canonical_request(config, history, new_message));
}

std::string frame_document(const std::string& name, const std::string& content) {
    std::string out = "--- DOCUMENT: " + name + " ---\n";
    out += content;
    if (!ends_with(content, "\n")) out += "\n";
    out += "--- END DOCUMENT ---";
    return out;
}

Gateway::Gateway(BackendConfig config) : config_(std::move(config)) {
    switch (config_.mode) {
        case BackendMode::Live: {
            if (config_.endpoint.empty()) {
                raise(ErrorCode::InvalidConfig, "live backend needs an endpoint");
            }
            const char* key = std::getenv("CEKER_API_KEY");
            if (key == nullptr || *key == '\0') {
                raise(ErrorCode::MissingCredential, "live backend needs CEKER_API_KEY set");
            }
            break;
        }
        case BackendMode::Replay: {
            if (config_.transcript_dir.empty() || !fs::is_directory(config_.transcript_dir)) {
                raise(ErrorCode::MissingTranscript,
                      "replay backend needs an existing transcript directory (got '" +
                          config_.transcript_dir + "')");
            }
            break;
        }
        case BackendMode::Mock: {
            if (config_.mock_rules_path.empty()) {
                raise(ErrorCode::InvalidConfig, "mock backend needs a rule file");
            }
            json arr;
            try {
                arr = json::parse(read_file(config_.mock_rules_path));
            } catch (const json::exception& e) {
                raise(ErrorCode::InvalidConfig,
                      std::string("mock rule file is not valid JSON: ") + e.what());
            }
            for (const json& j : arr) {
                mock_rules_.push_back({j.at("contains").get<std::string>(),
                                       j.at("response").get<std::string>()});
            }
            break;
        }
    }
}

Gateway::~Gateway() = default;

Session Gateway::open_session(const std::string& purpose_tag) {
    Session s;
    s.purpose_tag = purpose_tag;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        s.session_id = "sess-" + std::to_string(next_session_++);
    }
    if (config_.mode == BackendMode::Replay) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!replay_.count(purpose_tag)) {
            fs::path file = fs::path(config_.transcript_dir) / transcript_file_name(purpose_tag);
            if (!fs::exists(file)) {
                raise(ErrorCode::MissingTranscript,
                      "no transcript for " + purpose_tag + " (" + file.string() + ")");
            }
            Transcript t = load_transcript(file, purpose_tag);
            auto& map = replay_[purpose_tag];
            for (const auto& e : t.entries) map[e.request_digest] = e.response;
        }
    }
    return s;
}

LlmResponse Gateway::send(Session& session, const std::string& message) {
    if (message.empty()) {
        raise(ErrorCode::InvalidConfig, "cannot send an empty message");
    }
    if (config_.message_char_cap > 0 &&
        message.size() > static_cast<std::size_t>(config_.message_char_cap)) {
        raise(ErrorCode::TooLarge,
              "message of " + std::to_string(message.size()) + " chars exceeds the cap of " +
                  std::to_string(config_.message_char_cap));
    }
    if (!session.messages.empty() && session.messages.back().role == "user") {
        raise(ErrorCode::InvalidConfig, "session already has an unanswered user message");
    }

    std::string canonical = canonical_request(config_, session.messages, message);
    std::string digest = sha256_hex(canonical);
    capture(session.purpose_tag, canonical);

    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(digest);
        if (it != cache_.end()) {
            LlmResponse r;
            r.text = it->second;
            r.finish_reason = cache_finish_[digest];
            r.request_digest = digest;
            r.cached = true;
            session.push_exchange(message, r.text);
            return r;
        }
    }

    std::string finish_reason = "stop";
    std::string text = dispatch(session, message, digest, canonical, finish_reason);

    if (config_.mode != BackendMode::Replay && !config_.transcript_dir.empty()) {
        record_transcript(session.purpose_tag, digest, text);
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        cache_[digest] = text;
        cache_finish_[digest] = finish_reason;
    }

    LlmResponse r;
    r.text = text;
    r.finish_reason = finish_reason;
    r.request_digest = digest;
    r.cached = false;
    session.push_exchange(message, text);
    return r;
}

std::string Gateway::dispatch(const Session& session, const std::string& message,
                              const std::string& digest, const std::string& canonical,
                              std::string& finish_reason) {
    switch (config_.mode) {
        case BackendMode::Live:
            return send_live(canonical, finish_reason);
        case BackendMode::Replay:
            finish_reason = "replay";
            return send_replay(session, digest);
        case BackendMode::Mock:
            finish_reason = "mock";
            return send_mock(message, digest);
    }
    raise(ErrorCode::InvalidConfig, "unreachable backend mode");
}

std::string Gateway::send_replay(const Session& session, const std::string& digest) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto tag_it = replay_.find(session.purpose_tag);
    if (tag_it == replay_.end()) {
        raise(ErrorCode::MissingTranscript, "session " + session.purpose_tag + " was not opened");
    }
    auto it = tag_it->second.find(digest);
    if (it == tag_it->second.end()) {
        // Exact-digest matching only: a miss means the prompts or config
        // drifted from what was recorded, and must never fall through to live.
        raise(ErrorCode::ReplayMiss,
              "no transcript entry for digest " + digest + " in " + session.purpose_tag);
    }
    return it->second;
}

namespace {

// {{DIGEST8}}: first 8 hex chars of the request digest.
// {{SCORE:k}}: two-decimal value in [0.00, 1.00] derived from digest byte k.
std::string expand_mock_template(const std::string& tmpl, const std::string& digest) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        std::size_t close = tmpl.find("}}", open);
        if (close == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        std::string token = tmpl.substr(open + 2, close - open - 2);
        if (token == "DIGEST8") {
            out += digest.substr(0, 8);
        } else if (starts_with(token, "SCORE:")) {
            int index = std::atoi(token.c_str() + 6);
            std::size_t at = static_cast<std::size_t>(index) * 2;
            int byte = 0;
            if (at + 1 < digest.size()) {
                auto nibble = [](char c) {
                    return (c >= 'a') ? c - 'a' + 10 : c - '0';
                };
                byte = nibble(digest[at]) * 16 + nibble(digest[at + 1]);
            }
            out += format_hundredths((byte * 100 + 127) / 255);
        } else {
            out += "{{" + token + "}}";
        }
        pos = close + 2;
    }
    return out;
}

} // namespace

std::string Gateway::send_mock(const std::string& message, const std::string& digest) {
    for (const MockRule& rule : mock_rules_) {
        if (rule.contains.empty() || contains(message, rule.contains)) {
            return expand_mock_template(rule.response, digest);
        }
    }
    raise(ErrorCode::NoMockRule, "no mock rule matches the message");
}

std::string Gateway::send_live(const std::string& canonical, std::string& finish_reason) {
    rate_limit_live();
    const char* key = std::getenv("CEKER_API_KEY");
    if (key == nullptr || *key == '\0') {
        raise(ErrorCode::MissingCredential, "CEKER_API_KEY disappeared from the environment");
    }

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.request_timeout, 0);
    client.set_read_timeout(config_.request_timeout, 0);
    client.set_write_timeout(config_.request_timeout, 0);
    client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

    httplib::Error last_error = httplib::Error::Success;
    int last_status = 0;
    for (std::int64_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        }
        auto res = client.Post("/v1/chat/completions", canonical, "application/json");
        if (!res) {
            last_error = res.error();
            continue;
        }
        if (res->status >= 500) {
            last_status = res->status;
            continue;  // retryable
        }
        if (res->status != 200) {
            raise(ErrorCode::HttpError,
                  "chat completion failed: HTTP " + std::to_string(res->status) + " " + res->body);
        }
        try {
            json j = json::parse(res->body);
            const json& choice = j.at("choices").at(0);
            finish_reason = choice.value("finish_reason", "stop");
            return choice.at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            raise(ErrorCode::HttpError, std::string("malformed chat completion reply: ") + e.what());
        }
    }
    if (last_error == httplib::Error::ConnectionTimeout || last_error == httplib::Error::Read ||
        last_error == httplib::Error::Write) {
        raise(ErrorCode::Timeout, "request timed out after " +
                                      std::to_string(config_.max_retries + 1) + " attempts");
    }
    raise(ErrorCode::HttpError,
          "request failed after " + std::to_string(config_.max_retries + 1) + " attempts" +
              (last_status != 0 ? " (last status " + std::to_string(last_status) + ")"
                                : " (" + httplib::to_string(last_error) + ")"));
}

void Gateway::record_transcript(const std::string& purpose_tag, const std::string& digest,
                                const std::string& response) {
    std::lock_guard<std::mutex> lock(mutex_);
    fs::path dir(config_.transcript_dir);
    ensure_dir(dir);
    fs::path file = dir / transcript_file_name(purpose_tag);

    auto& seen = recorded_[purpose_tag];
    if (seen.empty() && fs::exists(file)) {
        // A resumed live run appends to an existing transcript; reload what is
        // already on disk so retries stay at-most-once per digest.
        for (const auto& e : load_transcript(file, purpose_tag).entries) {
            seen.insert(e.request_digest);
        }
    }
    if (seen.count(digest)) return;
    json line = {{"request_digest", digest}, {"response", response}};
    append_line(file, line.dump());
    seen.insert(digest);
}

void Gateway::capture(const std::string& purpose_tag, const std::string& canonical) {
    if (config_.capture_requests.empty()) return;
    std::lock_guard<std::mutex> lock(mutex_);
    json line = {{"purpose_tag", purpose_tag}, {"request", canonical}};
    append_line(config_.capture_requests, line.dump());
}

std::chrono::milliseconds rate_limit_wait(
    std::vector<std::chrono::steady_clock::time_point>& window,
    std::chrono::steady_clock::time_point now, std::int64_t per_minute) {
    if (per_minute <= 0) return std::chrono::milliseconds(0);
    auto window_start = now - std::chrono::minutes(1);
    window.erase(std::remove_if(window.begin(), window.end(),
                                [&](std::chrono::steady_clock::time_point t) {
                                    return t < window_start;
                                }),
                 window.end());
    if (window.size() < static_cast<std::size_t>(per_minute)) {
        window.push_back(now);
        return std::chrono::milliseconds(0);
    }
    auto until = window.front() + std::chrono::minutes(1);
    return std::chrono::duration_cast<std::chrono::milliseconds>(until - now) +
           std::chrono::milliseconds(1);
}

void Gateway::rate_limit_live() {
    if (config_.requests_per_minute <= 0) return;
    while (true) {
        std::chrono::milliseconds wait;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            wait = rate_limit_wait(live_dispatch_times_, std::chrono::steady_clock::now(),
                                   config_.requests_per_minute);
        }
        if (wait.count() == 0) return;
        std::this_thread::sleep_for(wait);
    }
}

} // namespace ceker
