#pragma once

#include "ceker/errors.hpp"
#include "ceker/gateway.hpp"
#include "ceker/project_store.hpp"
#include "ceker/prompts.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ceker {

struct ThemeEntry {
    std::string name;
    bool major = false;  // bold in the reply
    std::string support;
};

struct GapEntry {
    std::string name;
    std::string support;
};

struct Outline {
    std::vector<ThemeEntry> themes;
    std::vector<GapEntry> gaps;
};

// Markdown-list scan: items under a heading containing "theme" become themes,
// under "gap" gaps. **bold** items are major; text after the first colon or
// space-padded dash is the support. Non-list prose yields empty lists.
Outline parse_outline(const std::string& reply_text);

// All numbered/bulleted item texts in a reply, emphasis stripped.
std::vector<std::string> extract_list_items(const std::string& reply_text);

struct VocabEntry {
    std::string term;
    std::vector<std::string> synonyms;
};

// JSON wire form: [{term, synonyms:[...]}]
std::vector<VocabEntry> load_vocabulary(const std::string& json_text);

struct FrequencyTable {
    std::map<std::string, std::int64_t> entries;
    // matching is fixed: exact phrase, case-insensitive
};

// Case-insensitive whole-phrase counts, synonyms summed onto their term,
// overlapping occurrences counted non-overlapping left to right.
FrequencyTable tally(const std::vector<std::string>& texts,
                     const std::vector<VocabEntry>& vocabulary);

struct BaselineComparison {
    struct Row {
        std::string term;
        std::int64_t ceker_count = 0;
        std::int64_t baseline_count = 0;
        std::int64_t delta = 0;  // ceker - baseline
    };
    std::vector<Row> rows;  // union of term sets, sorted by term
    std::vector<std::string> overlap_terms;  // nonzero on both sides
};

BaselineComparison compare_baseline(const FrequencyTable& ceker, const FrequencyTable& baseline);

// CSV with header `term,count`.
FrequencyTable load_baseline_csv(const std::string& csv_text);

std::string analysis_step_id(const std::string& source_prompt_id, const std::string& analysis_id);

struct AnalysisRunSummary {
    std::size_t steps_total = 0;
    std::size_t steps_executed = 0;
    std::size_t steps_replayed = 0;
};

// One fresh session per aggregate document: the aggregate is inlined into the
// first message with GP-1, then GP-2, then the plan's specific prompts.
// Replies land in analysis/<source>/<analysis_id>.md plus the artifact store.
AnalysisRunSummary run_analysis(Project& project, const AnalysisPlan& plan,
                                const PromptCatalog& catalog, Gateway& gateway, int parallelism);

struct OutlineSet {
    struct ReplyOutline {
        std::string source_id;    // aggregate prompt, e.g. "P-1"
        std::string analysis_id;  // e.g. "GP-2"
        Outline outline;
    };
    std::vector<ReplyOutline> per_reply;
    Outline merged;  // deduped by name, first-seen order; major sticks
};

// Parses every completed analysis reply. Feeds analysis/outline.json.
OutlineSet collect_outlines(Project& project);
std::string outline_set_json(const OutlineSet& set);

} // namespace ceker
