#pragma once

#include "ceker/bibliography.hpp"
#include "ceker/errors.hpp"
#include "ceker/gateway.hpp"
#include "ceker/project_store.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ceker {

enum class PaperSource { Reused, Proposed, Manual };

const char* paper_source_name(PaperSource source);
PaperSource paper_source_from_name(const std::string& name);

struct PaperRecord {
    std::string paper_id;  // zero-padded ordinal, e.g. "paper-07"
    std::string title;
    std::string text;  // empty until attached for proposed papers
    PaperSource source = PaperSource::Reused;
    std::optional<VerificationResult> verification;
    bool included = true;
};

struct CollectionPolicy {
    int batch_size = 25;
    double stop_threshold = 0.10;
    int max_corpus = 0;  // 0 = uncapped
};

struct VetDecision {
    std::string candidate_title;  // references CandidateCitation.raw_title
    std::string decision;         // accept | reject
    std::string note;
    std::string decided_at;
    std::string decided_by = "human";
};

struct BatchOutcome {
    int proposed = 0;
    int new_unique_verified = 0;
};

std::string make_paper_id(int ordinal);
int paper_ordinal(const std::string& paper_id);

// ---- pure operations --------------------------------------------------------

struct IngestResult {
    std::vector<PaperRecord> records;
    Warnings warnings;
};

// One record per (title, text file) entry; duplicates by normalized title
// collapse to the first occurrence. Ids continue after existing_count.
IngestResult ingest_reused(const std::vector<std::pair<std::string, fs::path>>& entries,
                           int existing_count = 0);

struct ProposalResult {
    std::vector<CandidateCitation> candidates;
    std::string raw_response;
    Warnings warnings;
};

// Renders the collection prompt in a fresh session and parses the numbered
// list reply. Fewer than `count` parsed lines is a ShortBatch warning; none is
// an EmptyProposal error.
ProposalResult propose_candidates(const std::string& topic, int count, Gateway& gateway,
                                  int batch_number);

// Parses "1. Title" / "2) Title" lines, stripping markdown emphasis.
std::vector<CandidateCitation> parse_numbered_titles(const std::string& reply);

struct VetOutcome {
    std::vector<PaperRecord> additions;
    std::vector<std::pair<CandidateCitation, std::string>> exclusions;  // (candidate, reason)
    Warnings warnings;
};

// Applies verification results and human decisions. Verified candidates enter
// unless rejected; non-verified candidates need an explicit accept (status
// becomes overridden); ambiguous candidates without a decision raise
// MissingDecision. existing_titles (normalized) dedupes against the corpus.
VetOutcome vet(const std::vector<CandidateCitation>& candidates,
               const std::vector<VerificationResult>& results,
               const std::vector<VetDecision>& decisions,
               const std::vector<std::string>& existing_titles, int existing_count);

enum class CollectDecision { Continue, Stop };

// Diminishing-returns rule: stop when the last batch's new-verified rate falls
// below the threshold (a rate exactly at the threshold continues) or the
// corpus hit its cap.
CollectDecision should_stop(const std::vector<BatchOutcome>& batch_history,
                            const CollectionPolicy& policy, int corpus_size);

// ---- persistence ------------------------------------------------------------

// corpus/index.json (records without text), corpus/paper-NN.txt,
// corpus/candidates.json, corpus/decisions.jsonl.
class CorpusStore {
public:
    explicit CorpusStore(Project& project);

    std::vector<PaperRecord> load() const;  // texts populated from paper files
    void save(const std::vector<PaperRecord>& records);
    void append_records(const std::vector<PaperRecord>& additions);
    void attach_text(const std::string& paper_id, const std::string& text);

    std::vector<PaperRecord> included() const;

    struct CandidateState {
        CandidateCitation candidate;
        int batch = 1;
        std::optional<VerificationResult> result;
        bool consumed = false;  // already turned into a record or excluded
    };
    std::vector<CandidateState> load_candidates() const;
    void save_candidates(const std::vector<CandidateState>& states);

    void append_decision(const VetDecision& decision);
    std::vector<VetDecision> load_decisions() const;

private:
    Project& project_;
};

} // namespace ceker
