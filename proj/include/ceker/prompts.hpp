#pragma once

#include "ceker/errors.hpp"

#include <map>
#include <string>
#include <vector>

namespace ceker {

enum class PromptPhase { Collect, Extract, AnalyzeGeneral, AnalyzeSpecific };

const char* prompt_phase_name(PromptPhase phase);
PromptPhase prompt_phase_from_name(const std::string& name);

struct PromptTemplate {
    std::string template_id;  // "P-1".."P-6", "GP-1", "GP-2", "SP-1".."SP-9", "C-1", or user-defined
    PromptPhase phase = PromptPhase::Extract;
    std::string body;         // may contain {TOPIC}, {TERMS}, {N_RESPONSES}, {COUNT}
};

using Bindings = std::map<std::string, std::string>;

// "A, B, C": the list form {TERMS} binds to.
std::string join_terms(const std::vector<std::string>& terms);

// Exact placeholder substitution. Strict: placeholders without bindings raise
// UnboundPlaceholder, binding keys absent from the body raise UnknownPlaceholder.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

// Placeholder names ({A-Z_} tokens) appearing in the body, in order.
std::vector<std::string> placeholders_in(const std::string& body);

// The subset of `available` that the template actually uses, so strict render
// can be fed from one shared binding pool.
Bindings bindings_subset(const PromptTemplate& tmpl, const Bindings& available);

// Heuristic check that a prompt is wrapped to stay grounded in the provided
// document. Follow-up prompts that reference in-session context ("above")
// count as grounded; collect-phase prompts have no document and are exempt.
Warnings lint_grounding(const PromptTemplate& tmpl);

// Which analysis prompts run against which aggregate: GP ids first (GP-1
// before GP-2), then the aggregate's specific prompt ids in order.
struct AnalysisPlan {
    struct Entry {
        std::string source_prompt_id;
        std::vector<std::string> general_ids;
        std::vector<std::string> specific_ids;
    };
    std::vector<Entry> entries;

    const Entry* find(const std::string& source_prompt_id) const;
};

class PromptCatalog {
public:
    // The built-in catalog: collection, extraction and analysis prompts.
    static PromptCatalog builtin();

    const PromptTemplate& get(const std::string& template_id) const;
    bool has(const std::string& template_id) const;
    const std::vector<PromptTemplate>& all() const { return templates_; }
    std::vector<PromptTemplate> by_phase(PromptPhase phase) const;

    // Adds or replaces by template_id.
    void upsert(PromptTemplate tmpl);

    // JSON wire form: [{template_id, phase, body}]
    std::string to_json() const;
    static PromptCatalog from_json(const std::string& text);
    // Overlays a user prompt-set file onto this catalog.
    void merge_json(const std::string& text);

private:
    std::vector<PromptTemplate> templates_;
};

// GP-1/GP-2 for every aggregate plus the built-in specific mapping
// (P-1: SP-1 SP-2, P-2: SP-3 SP-4, P-3: SP-5 SP-6, P-4: SP-7, P-5: none,
// P-6: SP-8 SP-9). Extraction ids must exist in the catalog; ids without a
// specific mapping get the general prompts only.
AnalysisPlan default_plan(const std::vector<std::string>& extraction_prompt_ids,
                          const PromptCatalog& catalog);

} // namespace ceker
