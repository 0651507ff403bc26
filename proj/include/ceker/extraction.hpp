#pragma once

#include "ceker/corpus.hpp"
#include "ceker/errors.hpp"
#include "ceker/gateway.hpp"
#include "ceker/project_store.hpp"
#include "ceker/prompts.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ceker {

// 0.00..1.00 at two decimals, held in hundredths so formatting is exact.
struct RelevanceScore {
    std::string term;
    int value_hundredths = 0;
    std::optional<std::string> confidence;  // low | medium | high
    std::string explanation;

    std::string value_text() const;  // "0.85"
    double value() const { return value_hundredths / 100.0; }
};

struct ExtractionResponse {
    std::string paper_id;
    std::string prompt_id;
    std::string text;
    std::size_t word_count = 0;
    std::vector<RelevanceScore> scores;
};

struct AggregateBlock {
    std::string paper_id;
    std::string text;
    std::size_t word_count = 0;
};

struct AggregateDocument {
    std::string prompt_id;
    std::vector<AggregateBlock> blocks;  // sorted by paper_id
    std::size_t total_word_count = 0;    // response words only, headers excluded
};

struct ParsedScores {
    std::vector<RelevanceScore> scores;
    Warnings warnings;
};

// Line-oriented scan: a known term followed on the same line by a two-decimal
// value (or a bare 0/1), an optional "(low|medium|high)" confidence and the
// rest of the line as explanation. Values outside [0.00, 1.00] raise
// OutOfRange; a term scored twice keeps the first value with a DuplicateTerm
// warning.
ParsedScores parse_scores(const std::string& text, const std::vector<std::string>& expected_terms);

extern const char* const kExtractStepPrefix;  // "extract"

std::string extract_step_id(const std::string& prompt_id, const std::string& paper_id);

struct ExtractionRunSummary {
    std::size_t steps_total = 0;
    std::size_t steps_executed = 0;   // sent this run
    std::size_t steps_replayed = 0;   // already done, history rebuilt
};

// One fresh session per paper; prompts asked in catalog order with the paper
// text inlined into the first message. Every reply is persisted as an artifact
// and logged before the step counts as done, so an interrupted run resumes
// exactly.
ExtractionRunSummary run_extraction(Project& project, const std::vector<PaperRecord>& papers,
                                    const PromptCatalog& catalog,
                                    const std::vector<std::string>& prompt_ids, Gateway& gateway,
                                    int parallelism);

// Collates one prompt's responses over the corpus. IncompleteRun if any
// included paper lacks a done step.
AggregateDocument aggregate(Project& project, const std::vector<PaperRecord>& papers,
                            const std::string& prompt_id);

// "### Response <k> — <paper_id>" header per block.
std::string render_aggregate(const AggregateDocument& doc);
std::string aggregate_meta_json(const AggregateDocument& doc);

struct OffTopicReport {
    std::vector<std::pair<std::string, double>> flagged;  // (paper_id, mean score)
    std::vector<std::string> unscored;
    Warnings warnings;
};

// Mean parsed score per paper across all scored responses; advisory only.
OffTopicReport flag_off_topic(Project& project, const std::vector<PaperRecord>& papers,
                              const std::vector<std::string>& prompt_ids,
                              const std::vector<std::string>& terms, double threshold = 0.20);

// scores.csv content: paper_id,prompt_id,term,value,confidence
std::string scores_csv(Project& project, const std::vector<PaperRecord>& papers,
                       const std::vector<std::string>& prompt_ids,
                       const std::vector<std::string>& terms);

struct CombinedPart {
    std::string paper_id;
    std::string title;
    std::string text;
};

// Single document with `===== <label> <paper_id>: <title> =====` delimiters.
// If any text line could be mistaken for a delimiter line, the label gets a
// digest-fragment suffix for the whole document.
std::string build_combined_document(const std::vector<PaperRecord>& papers,
                                    const std::string& delimiter_label);

// Exact inverse of build_combined_document for the same label.
std::vector<CombinedPart> split_combined_document(const std::string& document,
                                                  const std::string& delimiter_label);

} // namespace ceker
