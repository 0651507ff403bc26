#include "ceker/config.hpp"

#include "ceker/errors.hpp"
#include "ceker/util.hpp"

#include <charconv>
#include <sstream>

namespace ceker {

namespace {

[[noreturn]] void bad_config(std::size_t line_no, const std::string& why) {
    raise(ErrorCode::InvalidConfig,
          "config line " + std::to_string(line_no) + ": " + why);
}

std::string parse_quoted(const std::string& v, std::size_t line_no) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
        bad_config(line_no, "expected quoted string, got " + v);
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        char c = v[i];
        if (c == '\\' && i + 2 < v.size()) {
            char n = v[i + 1];
            if (n == '"' || n == '\\') {
                out += n;
                ++i;
                continue;
            }
        }
        out += c;
    }
    return out;
}

TomlValue parse_value(const std::string& raw, std::size_t line_no) {
    std::string v = trim(raw);
    if (v.empty()) bad_config(line_no, "empty value");
    if (v.front() == '"') return parse_quoted(v, line_no);
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') bad_config(line_no, "unterminated array");
        std::vector<std::string> items;
        std::string inner = v.substr(1, v.size() - 2);
        std::size_t pos = 0;
        while (pos < inner.size()) {
            while (pos < inner.size() && (inner[pos] == ' ' || inner[pos] == ',')) ++pos;
            if (pos >= inner.size()) break;
            if (inner[pos] != '"') bad_config(line_no, "arrays hold quoted strings only");
            std::size_t end = inner.find('"', pos + 1);
            while (end != std::string::npos && inner[end - 1] == '\\') {
                end = inner.find('"', end + 1);
            }
            if (end == std::string::npos) bad_config(line_no, "unterminated string in array");
            items.push_back(parse_quoted(inner.substr(pos, end - pos + 1), line_no));
            pos = end + 1;
        }
        return items;
    }
    // number: integer unless it contains '.' or exponent
    if (v.find('.') != std::string::npos || v.find('e') != std::string::npos ||
        v.find('E') != std::string::npos) {
        try {
            return std::stod(v);
        } catch (...) {
            bad_config(line_no, "bad float " + v);
        }
    }
    std::int64_t n = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size()) {
        bad_config(line_no, "bad value " + v);
    }
    return n;
}

} // namespace

TomlTable parse_toml_subset(const std::string& text) {
    TomlTable table;
    std::string section;
    std::size_t line_no = 0;
    for (const std::string& raw : split_lines(text)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad_config(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) bad_config(line_no, "empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) bad_config(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) bad_config(line_no, "empty key");
        std::string full = section.empty() ? key : section + "." + key;
        table[full] = parse_value(line.substr(eq + 1), line_no);
    }
    return table;
}

namespace {

template <typename T>
void fetch(const TomlTable& t, const std::string& key, T& out) {
    auto it = t.find(key);
    if (it == t.end()) return;
    if (const T* v = std::get_if<T>(&it->second)) {
        out = *v;
        return;
    }
    // allow integer literals for double-typed keys
    if constexpr (std::is_same_v<T, double>) {
        if (const std::int64_t* i = std::get_if<std::int64_t>(&it->second)) {
            out = static_cast<double>(*i);
            return;
        }
    }
    raise(ErrorCode::InvalidConfig, "config key " + key + " has the wrong type");
}

} // namespace

CekerConfig CekerConfig::from_toml(const std::string& text) {
    TomlTable t = parse_toml_subset(text);
    CekerConfig c;
    fetch(t, "topic", c.topic);
    fetch(t, "gateway.backend", c.backend);
    fetch(t, "gateway.endpoint", c.endpoint);
    fetch(t, "gateway.model", c.model);
    fetch(t, "gateway.temperature", c.temperature);
    fetch(t, "gateway.seed", c.seed);
    fetch(t, "gateway.request_timeout", c.request_timeout);
    fetch(t, "gateway.max_retries", c.max_retries);
    fetch(t, "gateway.requests_per_minute", c.requests_per_minute);
    fetch(t, "gateway.message_char_cap", c.message_char_cap);
    fetch(t, "gateway.transcripts", c.transcripts_dir);
    fetch(t, "gateway.mock_rules", c.mock_rules);
    fetch(t, "gateway.capture_requests", c.capture_requests);
    fetch(t, "collection.batch_size", c.batch_size);
    fetch(t, "collection.stop_threshold", c.stop_threshold);
    fetch(t, "collection.max_corpus", c.max_corpus);
    fetch(t, "verification.threshold", c.verify_threshold);
    fetch(t, "verification.ambiguity_gap", c.ambiguity_gap);
    fetch(t, "verification.resolvers", c.resolvers);
    fetch(t, "extraction.terms", c.terms);
    fetch(t, "extraction.off_topic_threshold", c.off_topic_threshold);
    fetch(t, "extraction.parallelism", c.parallelism);
    fetch(t, "extraction.prompts", c.prompts_file);
    fetch(t, "analysis.baseline", c.baseline_csv);
    for (const auto& [key, value] : t) {
        if (starts_with(key, "vocab.")) {
            if (const std::string* path = std::get_if<std::string>(&value)) {
                c.vocabularies.emplace_back(key.substr(6), *path);
            } else {
                raise(ErrorCode::InvalidConfig, "vocab entries must be string paths");
            }
        }
    }
    return c;
}

std::string CekerConfig::default_toml(const std::string& topic) {
    std::ostringstream out;
    out << "# ceker project configuration\n";
    out << "topic = \"" << topic << "\"\n";
    out << "\n[gateway]\n";
    out << "backend = \"mock\"\n";
    out << "model = \"gpt-4o\"\n";
    out << "temperature = 0.0\n";
    out << "seed = 0\n";
    out << "request_timeout = 30\n";
    out << "max_retries = 2\n";
    out << "\n[collection]\n";
    out << "batch_size = 25\n";
    out << "stop_threshold = 0.10\n";
    out << "max_corpus = 0\n";
    out << "\n[verification]\n";
    out << "threshold = 0.90\n";
    out << "ambiguity_gap = 0.02\n";
    out << "resolvers = []\n";
    out << "\n[extraction]\n";
    out << "terms = [\"ASLR\", \"DEP\", \"Stack Canaries\"]\n";
    out << "off_topic_threshold = 0.20\n";
    out << "parallelism = 4\n";
    return out.str();
}

std::string canonicalize_config(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t start = 0;
    if (raw.size() >= 3 && static_cast<unsigned char>(raw[0]) == 0xEF &&
        static_cast<unsigned char>(raw[1]) == 0xBB &&
        static_cast<unsigned char>(raw[2]) == 0xBF) {
        start = 3;
    }
    for (std::size_t i = start; i < raw.size(); ++i) {
        if (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') continue;
        out += raw[i];
    }
    return out;
}

} // namespace ceker
