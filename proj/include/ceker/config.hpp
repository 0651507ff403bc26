#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace ceker {

// ceker.toml is a flat TOML subset: [section] headers, `key = value` pairs,
// strings, integers, floats, booleans and arrays of strings. Keys are
// flattened to "section.key".
using TomlValue = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml_subset(const std::string& text);

// Resolved project configuration. Field defaults are the documented CLI
// defaults; ceker.toml overrides them and command-line flags override both.
struct CekerConfig {
    std::string topic;

    // gateway
    std::string backend = "mock";     // live | replay | mock
    std::string endpoint;             // live only
    std::string model = "gpt-4o";
    double temperature = 0.0;
    std::int64_t seed = 0;
    std::int64_t request_timeout = 30;  // seconds
    std::int64_t max_retries = 2;
    std::int64_t requests_per_minute = 0;  // 0 = unlimited
    std::int64_t message_char_cap = 500000;
    std::string transcripts_dir;      // replay source / live recording sink
    std::string mock_rules;           // mock backend rule file
    std::string capture_requests;     // optional request capture log

    // collection
    std::int64_t batch_size = 25;
    double stop_threshold = 0.10;
    std::int64_t max_corpus = 0;      // 0 = uncapped

    // verification
    double verify_threshold = 0.90;
    double ambiguity_gap = 0.02;
    std::vector<std::string> resolvers;  // "fixture:<path>", "crossref", "arxiv"

    // extraction
    std::vector<std::string> terms = {"ASLR", "DEP", "Stack Canaries"};
    double off_topic_threshold = 0.20;
    std::int64_t parallelism = 4;
    std::string prompts_file;         // optional user prompt set

    // analysis / reporting
    std::string baseline_csv;
    std::vector<std::pair<std::string, std::string>> vocabularies;  // (label, path)

    static CekerConfig from_toml(const std::string& text);
    // The ceker.toml content `init` writes for a fresh project.
    static std::string default_toml(const std::string& topic);
};

// Digest input for ProjectManifest.config_digest: strips a UTF-8 BOM and
// normalizes CRLF to LF, nothing else.
std::string canonicalize_config(const std::string& raw);

} // namespace ceker
