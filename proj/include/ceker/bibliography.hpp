#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ceker {

struct CandidateCitation {
    std::string raw_title;
    std::string origin = "llm_proposed";  // llm_proposed | manual
    int batch_index = 0;
};

struct ResolverMatch {
    std::string source;         // resolver name
    std::string matched_title;  // as returned by the source
    std::string external_id;    // DOI / arXiv id / fixture id
    double similarity = 0.0;
};

enum class VerificationStatus { Verified, NotFound, Ambiguous, Overridden };

const char* verification_status_name(VerificationStatus status);
VerificationStatus verification_status_from_name(const std::string& name);

struct VerificationResult {
    VerificationStatus status = VerificationStatus::NotFound;
    std::optional<ResolverMatch> best_match;
    double threshold_used = 0.90;
};

struct ResolvePolicy {
    double threshold = 0.90;
    double ambiguity_gap = 0.02;
};

// Lowercased, compatibility-folded, punctuation stripped, whitespace collapsed.
// Common typographic characters (dashes, curly quotes, ligatures, accented
// Latin) fold to their ASCII counterparts; anything else non-alphanumeric
// becomes a space.
std::string normalize_title(const std::string& title);

std::size_t levenshtein_distance(const std::string& a, const std::string& b);

// 1 - lev(a,b)/max(|a|,|b|); 1.0 when both empty. Inputs should already be
// normalized.
double title_similarity(const std::string& a, const std::string& b);

class Resolver {
public:
    virtual ~Resolver() = default;
    virtual std::string name() const = 0;
    // Top matches for the title, similarity already computed against the
    // normalized query. Throws Error(ResolverUnavailable) on transport failure.
    virtual std::vector<ResolverMatch> query(const std::string& title) = 0;
};

// Local JSON works database: [{id, title}]. First-class backend for fully
// offline operation, not just a test double.
class FixtureResolver : public Resolver {
public:
    explicit FixtureResolver(const std::string& json_path);
    static FixtureResolver from_json_text(const std::string& json_text);

    std::string name() const override { return "fixture"; }
    std::vector<ResolverMatch> query(const std::string& title) override;

private:
    FixtureResolver() = default;
    struct Work {
        std::string id;
        std::string title;
        std::string normalized;
    };
    std::vector<Work> works_;
};

// Crossref works endpoint. base_url defaults to the public API; tests point
// it at a local stub.
class CrossrefResolver : public Resolver {
public:
    explicit CrossrefResolver(std::string base_url = "https://api.crossref.org",
                              int timeout_seconds = 30);
    std::string name() const override { return "crossref"; }
    std::vector<ResolverMatch> query(const std::string& title) override;

private:
    std::string base_url_;
    int timeout_seconds_;
};

// arXiv Atom query endpoint.
class ArxivResolver : public Resolver {
public:
    explicit ArxivResolver(std::string base_url = "http://export.arxiv.org",
                           int timeout_seconds = 30);
    std::string name() const override { return "arxiv"; }
    std::vector<ResolverMatch> query(const std::string& title) override;

private:
    std::string base_url_;
    int timeout_seconds_;
};

// Queries resolvers in order and classifies the candidate. Any resolver
// failure defers the candidate (ResolverUnavailable) so network trouble never
// masquerades as a hallucination detection.
VerificationResult resolve(const CandidateCitation& candidate,
                           const std::vector<std::shared_ptr<Resolver>>& resolvers,
                           const ResolvePolicy& policy = {});

std::string url_encode(const std::string& value);

} // namespace ceker
