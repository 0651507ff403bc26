#include "ceker/bibliography.hpp"

#include "ceker/errors.hpp"
#include "ceker/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>

namespace ceker {

using nlohmann::json;

const char* verification_status_name(VerificationStatus status) {
    switch (status) {
        case VerificationStatus::Verified: return "verified";
        case VerificationStatus::NotFound: return "not_found";
        case VerificationStatus::Ambiguous: return "ambiguous";
        case VerificationStatus::Overridden: return "overridden";
    }
    return "not_found";
}

VerificationStatus verification_status_from_name(const std::string& name) {
    if (name == "verified") return VerificationStatus::Verified;
    if (name == "not_found") return VerificationStatus::NotFound;
    if (name == "ambiguous") return VerificationStatus::Ambiguous;
    if (name == "overridden") return VerificationStatus::Overridden;
    raise(ErrorCode::InvalidConfig, "unknown verification status: " + name);
}

namespace {

// Folds one code point to ASCII: letters/digits pass through lowercased,
// common typographic characters and accented Latin map to ASCII, everything
// else becomes a space.
void fold_codepoint(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        unsigned char c = static_cast<unsigned char>(cp);
        if (std::isalnum(c)) {
            out += static_cast<char>(std::tolower(c));
        } else {
            out += ' ';
        }
        return;
    }
    struct FoldEntry {
        std::uint32_t cp;
        const char* to;
    };
    static const FoldEntry kFold[] = {
        {0x00C0, "a"}, {0x00C1, "a"}, {0x00C2, "a"}, {0x00C3, "a"}, {0x00C4, "a"},
        {0x00C5, "a"}, {0x00C6, "ae"}, {0x00C7, "c"}, {0x00C8, "e"}, {0x00C9, "e"},
        {0x00CA, "e"}, {0x00CB, "e"}, {0x00CC, "i"}, {0x00CD, "i"}, {0x00CE, "i"},
        {0x00CF, "i"}, {0x00D1, "n"}, {0x00D2, "o"}, {0x00D3, "o"}, {0x00D4, "o"},
        {0x00D5, "o"}, {0x00D6, "o"}, {0x00D8, "o"}, {0x00D9, "u"}, {0x00DA, "u"},
        {0x00DB, "u"}, {0x00DC, "u"}, {0x00DD, "y"}, {0x00DF, "ss"},
        {0x00E0, "a"}, {0x00E1, "a"}, {0x00E2, "a"}, {0x00E3, "a"}, {0x00E4, "a"},
        {0x00E5, "a"}, {0x00E6, "ae"}, {0x00E7, "c"}, {0x00E8, "e"}, {0x00E9, "e"},
        {0x00EA, "e"}, {0x00EB, "e"}, {0x00EC, "i"}, {0x00ED, "i"}, {0x00EE, "i"},
        {0x00EF, "i"}, {0x00F1, "n"}, {0x00F2, "o"}, {0x00F3, "o"}, {0x00F4, "o"},
        {0x00F5, "o"}, {0x00F6, "o"}, {0x00F8, "o"}, {0x00F9, "u"}, {0x00FA, "u"},
        {0x00FB, "u"}, {0x00FC, "u"}, {0x00FD, "y"}, {0x00FF, "y"},
        {0xFB01, "fi"}, {0xFB02, "fl"},
    };
    for (const FoldEntry& e : kFold) {
        if (e.cp == cp) {
            out += e.to;
            return;
        }
    }
    // dashes, quotes, ellipses, bullets, nbsp and any other symbol: separator
    out += ' ';
}

} // namespace

std::string normalize_title(const std::string& title) {
    std::string folded;
    folded.reserve(title.size());
    std::size_t i = 0;
    const std::size_t n = title.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(title[i]);
        std::uint32_t cp = 0;
        std::size_t len = 1;
        if (c < 0x80) {
            cp = c;
        } else if ((c & 0xE0) == 0xC0 && i + 1 < n) {
            cp = ((c & 0x1Fu) << 6) | (static_cast<unsigned char>(title[i + 1]) & 0x3Fu);
            len = 2;
        } else if ((c & 0xF0) == 0xE0 && i + 2 < n) {
            cp = ((c & 0x0Fu) << 12) | ((static_cast<unsigned char>(title[i + 1]) & 0x3Fu) << 6) |
                 (static_cast<unsigned char>(title[i + 2]) & 0x3Fu);
            len = 3;
        } else if ((c & 0xF8) == 0xF0 && i + 3 < n) {
            cp = 0x10000;  // beyond the fold table; treated as separator
            len = 4;
        } else {
            cp = ' ';  // invalid byte: separator
        }
        fold_codepoint(cp, folded);
        i += len;
    }

    // collapse runs of spaces, trim
    std::string out;
    out.reserve(folded.size());
    bool pending_space = false;
    for (char c : folded) {
        if (c == ' ') {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

std::size_t levenshtein_distance(const std::string& a, const std::string& b) {
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    if (m == 0) return n;
    if (n == 0) return m;

    std::vector<std::size_t> prev(n + 1);
    std::vector<std::size_t> cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

double title_similarity(const std::string& a, const std::string& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t longest = std::max(a.size(), b.size());
    return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

// ---- fixture resolver -------------------------------------------------------

FixtureResolver::FixtureResolver(const std::string& json_path) {
    *this = from_json_text(read_file(json_path));
}

FixtureResolver FixtureResolver::from_json_text(const std::string& json_text) {
    FixtureResolver r;
    json arr;
    try {
        arr = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidConfig, std::string("fixture resolver file is not valid JSON: ") + e.what());
    }
    for (const json& j : arr) {
        Work w;
        w.id = j.at("id").get<std::string>();
        w.title = j.at("title").get<std::string>();
        w.normalized = normalize_title(w.title);
        r.works_.push_back(std::move(w));
    }
    return r;
}

std::vector<ResolverMatch> FixtureResolver::query(const std::string& title) {
    std::string needle = normalize_title(title);
    std::vector<ResolverMatch> matches;
    for (const Work& w : works_) {
        ResolverMatch m;
        m.source = name();
        m.matched_title = w.title;
        m.external_id = w.id;
        m.similarity = title_similarity(needle, w.normalized);
        matches.push_back(std::move(m));
    }
    std::stable_sort(matches.begin(), matches.end(),
                     [](const ResolverMatch& a, const ResolverMatch& b) {
                         return a.similarity > b.similarity;
                     });
    if (matches.size() > 5) matches.resize(5);
    return matches;
}

// ---- HTTP resolvers ---------------------------------------------------------

std::string url_encode(const std::string& value) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : value) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0x0F];
        }
    }
    return out;
}

namespace {

std::string http_get(const std::string& base_url, const std::string& path,
                     const std::string& resolver_name, int timeout_seconds) {
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) {
        raise(ErrorCode::ResolverUnavailable,
              resolver_name + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        raise(ErrorCode::ResolverUnavailable,
              resolver_name + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
}

// Minimal Atom scan: the text of <tag>...</tag> within each <entry>.
std::vector<std::string> xml_tag_texts(const std::string& xml, const std::string& tag) {
    std::vector<std::string> out;
    std::string open = "<" + tag;
    std::string close = "</" + tag + ">";
    std::size_t pos = 0;
    while ((pos = xml.find(open, pos)) != std::string::npos) {
        std::size_t gt = xml.find('>', pos);
        if (gt == std::string::npos) break;
        std::size_t end = xml.find(close, gt + 1);
        if (end == std::string::npos) break;
        out.push_back(trim(xml.substr(gt + 1, end - gt - 1)));
        pos = end + close.size();
    }
    return out;
}

} // namespace

CrossrefResolver::CrossrefResolver(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

std::vector<ResolverMatch> CrossrefResolver::query(const std::string& title) {
    std::string body = http_get(base_url_, "/works?query.title=" + url_encode(title) + "&rows=5",
                                name(), timeout_seconds_);
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        raise(ErrorCode::ResolverUnavailable, std::string("crossref: bad JSON: ") + e.what());
    }
    std::string needle = normalize_title(title);
    std::vector<ResolverMatch> matches;
    for (const json& item : j.value("message", json::object()).value("items", json::array())) {
        if (!item.contains("title") || !item["title"].is_array() || item["title"].empty()) continue;
        ResolverMatch m;
        m.source = name();
        m.matched_title = item["title"][0].get<std::string>();
        m.external_id = item.value("DOI", "");
        m.similarity = title_similarity(needle, normalize_title(m.matched_title));
        matches.push_back(std::move(m));
    }
    return matches;
}

ArxivResolver::ArxivResolver(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

std::vector<ResolverMatch> ArxivResolver::query(const std::string& title) {
    std::string body = http_get(
        base_url_,
        "/api/query?search_query=ti:%22" + url_encode(title) + "%22&max_results=5",
        name(), timeout_seconds_);

    std::string needle = normalize_title(title);
    std::vector<ResolverMatch> matches;
    std::size_t pos = 0;
    while ((pos = body.find("<entry>", pos)) != std::string::npos) {
        std::size_t end = body.find("</entry>", pos);
        if (end == std::string::npos) break;
        std::string entry = body.substr(pos, end - pos);
        auto titles = xml_tag_texts(entry, "title");
        auto ids = xml_tag_texts(entry, "id");
        if (!titles.empty()) {
            ResolverMatch m;
            m.source = name();
            m.matched_title = titles.front();
            m.external_id = ids.empty() ? "" : ids.front();
            m.similarity = title_similarity(needle, normalize_title(m.matched_title));
            matches.push_back(std::move(m));
        }
        pos = end + 8;
    }
    return matches;
}

// ---- classification ---------------------------------------------------------

VerificationResult resolve(const CandidateCitation& candidate,
                           const std::vector<std::shared_ptr<Resolver>>& resolvers,
                           const ResolvePolicy& policy) {
    if (trim(candidate.raw_title).empty()) {
        raise(ErrorCode::InvalidCandidate, "candidate title is empty");
    }
    if (resolvers.empty()) {
        raise(ErrorCode::InvalidConfig, "no resolvers configured");
    }

    std::vector<ResolverMatch> matches;
    for (const auto& resolver : resolvers) {
        auto batch = resolver->query(candidate.raw_title);
        matches.insert(matches.end(), batch.begin(), batch.end());
    }
    // resolver order, then per-resolver rank, is the tie-break
    std::stable_sort(matches.begin(), matches.end(),
                     [](const ResolverMatch& a, const ResolverMatch& b) {
                         return a.similarity > b.similarity;
                     });

    VerificationResult result;
    result.threshold_used = policy.threshold;
    if (matches.empty()) {
        result.status = VerificationStatus::NotFound;
        return result;
    }
    result.best_match = matches.front();
    if (matches.front().similarity < policy.threshold) {
        result.status = VerificationStatus::NotFound;
        return result;
    }
    // Ambiguity: a second distinct work (by normalized title) also above the
    // threshold and within the gap of the best.
    std::string best_norm = normalize_title(matches.front().matched_title);
    for (std::size_t i = 1; i < matches.size(); ++i) {
        if (normalize_title(matches[i].matched_title) == best_norm) continue;
        if (matches[i].similarity >= policy.threshold &&
            matches.front().similarity - matches[i].similarity <= policy.ambiguity_gap) {
            result.status = VerificationStatus::Ambiguous;
            return result;
        }
        break;  // matches are sorted; the first distinct work decides
    }
    result.status = VerificationStatus::Verified;
    return result;
}

} // namespace ceker
