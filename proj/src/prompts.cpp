#include "ceker/prompts.hpp"

#include "ceker/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace ceker {

using nlohmann::json;

const char* prompt_phase_name(PromptPhase phase) {
    switch (phase) {
        case PromptPhase::Collect: return "collect";
        case PromptPhase::Extract: return "extract";
        case PromptPhase::AnalyzeGeneral: return "analyze_general";
        case PromptPhase::AnalyzeSpecific: return "analyze_specific";
    }
    return "extract";
}

PromptPhase prompt_phase_from_name(const std::string& name) {
    if (name == "collect") return PromptPhase::Collect;
    if (name == "extract") return PromptPhase::Extract;
    if (name == "analyze_general") return PromptPhase::AnalyzeGeneral;
    if (name == "analyze_specific") return PromptPhase::AnalyzeSpecific;
    raise(ErrorCode::InvalidConfig, "unknown prompt phase: " + name);
}

std::string join_terms(const std::vector<std::string>& terms) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i > 0) out += ", ";
        out += terms[i];
    }
    return out;
}

std::vector<std::string> placeholders_in(const std::string& body) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = body.find('{', pos)) != std::string::npos) {
        std::size_t end = pos + 1;
        while (end < body.size() && (std::isupper(static_cast<unsigned char>(body[end])) || body[end] == '_')) {
            ++end;
        }
        if (end < body.size() && body[end] == '}' && end > pos + 1) {
            names.push_back(body.substr(pos + 1, end - pos - 1));
            pos = end + 1;
        } else {
            ++pos;
        }
    }
    return names;
}

Bindings bindings_subset(const PromptTemplate& tmpl, const Bindings& available) {
    Bindings out;
    for (const std::string& name : placeholders_in(tmpl.body)) {
        auto it = available.find(name);
        if (it != available.end()) out[name] = it->second;
    }
    return out;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
    std::vector<std::string> names = placeholders_in(tmpl.body);
    for (const auto& [key, value] : bindings) {
        if (std::find(names.begin(), names.end(), key) == names.end()) {
            raise(ErrorCode::UnknownPlaceholder,
                  tmpl.template_id + ": binding " + key + " matches no placeholder");
        }
    }
    std::string out;
    out.reserve(tmpl.body.size());
    std::size_t pos = 0;
    while (pos < tmpl.body.size()) {
        std::size_t open = tmpl.body.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl.body, pos, std::string::npos);
            break;
        }
        out.append(tmpl.body, pos, open - pos);
        std::size_t end = open + 1;
        while (end < tmpl.body.size() &&
               (std::isupper(static_cast<unsigned char>(tmpl.body[end])) || tmpl.body[end] == '_')) {
            ++end;
        }
        if (end < tmpl.body.size() && tmpl.body[end] == '}' && end > open + 1) {
            std::string name = tmpl.body.substr(open + 1, end - open - 1);
            auto it = bindings.find(name);
            if (it == bindings.end()) {
                raise(ErrorCode::UnboundPlaceholder,
                      tmpl.template_id + ": no binding for {" + name + "}");
            }
            out += it->second;
            pos = end + 1;
        } else {
            out += '{';
            pos = open + 1;
        }
    }
    return out;
}

namespace {

// Source-mention phrases, searched case-insensitively.
bool find_first(const std::string& lower_body, const std::vector<std::string>& phrases,
                std::size_t* end_pos) {
    std::size_t best = std::string::npos;
    std::size_t best_len = 0;
    for (const std::string& p : phrases) {
        std::size_t at = lower_body.find(p);
        if (at != std::string::npos && (best == std::string::npos || at < best)) {
            best = at;
            best_len = p.size();
        }
    }
    if (best == std::string::npos) return false;
    if (end_pos) *end_pos = best + best_len;
    return true;
}

const std::vector<std::string> kSourcePhrases = {
    "using the provided paper", "in the provided paper", "the provided paper",
    "the provided document",    "provided document",
};

const std::vector<std::string> kTailPhrases = {
    "discussed in the paper", "in the paper", "the paper",
    "the provided paper",     "the document", "the provided document",
};

} // namespace

Warnings lint_grounding(const PromptTemplate& tmpl) {
    Warnings warnings;
    if (tmpl.phase == PromptPhase::Collect) return warnings;  // no document yet

    std::string lower = to_lower_ascii(tmpl.body);
    bool session_ref = contains(lower, "above");

    if (tmpl.phase == PromptPhase::Extract) {
        std::size_t anchor_end = 0;
        bool anchored = find_first(lower, kSourcePhrases, &anchor_end);
        if (!anchored && !session_ref) {
            warnings.push_back({"MissingAnchor",
                                tmpl.template_id +
                                    ": no grounding anchor (e.g. \"Using the provided paper\")"});
        }
        bool tail_ref = session_ref;
        if (!tail_ref && anchored) {
            std::string rest = lower.substr(anchor_end);
            std::size_t ignored = 0;
            tail_ref = find_first(rest, kTailPhrases, &ignored);
        }
        if (!tail_ref) {
            warnings.push_back({"MissingTrailingReference",
                                tmpl.template_id +
                                    ": no trailing in-paper reference (e.g. \"discussed in the paper\")"});
        }
        return warnings;
    }

    // analyze phases: must name the provided document (or lean on session context)
    if (!contains(lower, "provided document") && !contains(lower, "provided paper") &&
        !session_ref) {
        warnings.push_back({"MissingDocumentReference",
                            tmpl.template_id + ": does not name the provided document"});
    }
    return warnings;
}

const AnalysisPlan::Entry* AnalysisPlan::find(const std::string& source_prompt_id) const {
    for (const Entry& e : entries) {
        if (e.source_prompt_id == source_prompt_id) return &e;
    }
    return nullptr;
}

PromptCatalog PromptCatalog::builtin() {
    PromptCatalog c;
    auto add = [&c](const char* id, PromptPhase phase, const char* body) {
        c.templates_.push_back({id, phase, body});
    };

    add("C-1", PromptPhase::Collect,
        "Find {COUNT} highly cited research articles that focus on {TOPIC}");

    add("P-1", PromptPhase::Extract,
        "What are the security features discussed in the provided paper and how do they "
        "relate to the unikernels discussed in the paper?");
    add("P-2", PromptPhase::Extract,
        "Using the provided paper and the security features obtained above, provide a score "
        "between 0.00-1.00 to two decimal places that describes their relevance to the paper "
        "and the unikernel discussed in the paper.");
    add("P-3", PromptPhase::Extract,
        "Using the provided paper, for each of the security terms ({TERMS}), provide a score "
        "between 0.00-1.00 to two decimal places that describes their relevance to unikernels "
        "discussed in the paper.");
    add("P-4", PromptPhase::Extract,
        "Using the provided paper, for each of the security terms ({TERMS}), provide a score "
        "between 0.00-1.00 to two decimal places that describes their relevance to the paper. "
        "Also provide your confidence in the score (low, medium, high) along with an "
        "explanation for the score.");
    add("P-5", PromptPhase::Extract,
        "How was the relevance score calculated for the above question?");
    add("P-6", PromptPhase::Extract,
        "What are the unikernels discussed in the provided paper and what security features "
        "are discussed in relation to the unikernels discussed in the provided paper?");

    add("GP-1", PromptPhase::AnalyzeGeneral,
        "The provided document contains {N_RESPONSES} responses, one response per unique "
        "research paper. Summarize all the responses.");
    add("GP-2", PromptPhase::AnalyzeGeneral,
        "Using the above summaries, what conclusions can you draw?");

    add("SP-1", PromptPhase::AnalyzeSpecific,
        "Using the provided document, what is the most common security feature discussed in "
        "the summaries, and what is the most frequently identified gap in the summaries?");
    add("SP-2", PromptPhase::AnalyzeSpecific,
        "Using the provided document, what are the top three unikernels discussed the most "
        "frequently?");
    add("SP-3", PromptPhase::AnalyzeSpecific,
        "The provided document contains {N_RESPONSES} responses, one response per unique "
        "research paper, scoring between 0.00-1.00 to two decimal places, the relevance "
        "security features has to the paper. What is the most common security feature, and "
        "what does the response say about its context as it relates to the paper?");
    add("SP-4", PromptPhase::AnalyzeSpecific,
        "The provided document contains {N_RESPONSES} responses, one response per unique "
        "research paper, scoring between 0.00-1.00 to two decimal places, the relevance "
        "security features has to the paper. What is the least common security feature, and "
        "what does the response say about its context as it relates to the paper?");
    add("SP-5", PromptPhase::AnalyzeSpecific,
        "The provided paper has {N_RESPONSES} responses, one response per unique research "
        "paper, to the question “Using the provided paper, for each of the security "
        "terms ({TERMS}), provide a score between 0.00-1.00 to two decimal places that "
        "describes their relevance to unikernels discussed in the paper.” Organize the "
        "papers from the scores closest to 0.00 to the scores closest to 1.00");
    add("SP-6", PromptPhase::AnalyzeSpecific,
        "Using the provided document, which paper has the highest score for ASLR? Which paper "
        "has the highest score for DEP? Which paper has the highest score for Stack Canaries? "
        "Which paper has the lowest score for ASLR? Which Paper has the lowest score for DEP? "
        "Which paper has the lowest score for Stack Canaries?");
    add("SP-7", PromptPhase::AnalyzeSpecific,
        "The provided paper has {N_RESPONSES} responses, one response per unique research "
        "paper, to the question “Using the provided paper, for each of the security "
        "terms ({TERMS}), provide a score between 0.00-1.00 to two decimal places that "
        "describes their relevance to the paper. Also provide your confidence in the score "
        "(low, medium, high) along with an explanation for the score.” Organize the "
        "papers from highest to lowest confidence score");
    add("SP-8", PromptPhase::AnalyzeSpecific,
        "The provided paper has {N_RESPONSES} responses, one response per unique research "
        "paper, to the question “What are the unikernels discussed in the provided paper "
        "and what security features are discussed in relation to the unikernels discussed in "
        "the provided paper?” Identify what is the most commonly discussed unikernel and "
        "what its security features are.");
    add("SP-9", PromptPhase::AnalyzeSpecific,
        "Using the provided document, what are the top five most commonly discussed "
        "unikernels and the top five most commonly discussed security features");

    return c;
}

const PromptTemplate& PromptCatalog::get(const std::string& template_id) const {
    for (const PromptTemplate& t : templates_) {
        if (t.template_id == template_id) return t;
    }
    raise(ErrorCode::UnknownPromptId, "prompt " + template_id + " is not in the catalog");
}

bool PromptCatalog::has(const std::string& template_id) const {
    for (const PromptTemplate& t : templates_) {
        if (t.template_id == template_id) return true;
    }
    return false;
}

std::vector<PromptTemplate> PromptCatalog::by_phase(PromptPhase phase) const {
    std::vector<PromptTemplate> out;
    for (const PromptTemplate& t : templates_) {
        if (t.phase == phase) out.push_back(t);
    }
    return out;
}

void PromptCatalog::upsert(PromptTemplate tmpl) {
    if (tmpl.template_id.empty() || tmpl.body.empty()) {
        raise(ErrorCode::InvalidConfig, "prompt templates need a template_id and a body");
    }
    for (PromptTemplate& t : templates_) {
        if (t.template_id == tmpl.template_id) {
            t = std::move(tmpl);
            return;
        }
    }
    templates_.push_back(std::move(tmpl));
}

std::string PromptCatalog::to_json() const {
    json arr = json::array();
    for (const PromptTemplate& t : templates_) {
        arr.push_back({{"template_id", t.template_id},
                       {"phase", prompt_phase_name(t.phase)},
                       {"body", t.body}});
    }
    return arr.dump(2) + "\n";
}

PromptCatalog PromptCatalog::from_json(const std::string& text) {
    PromptCatalog c;
    c.merge_json(text);
    return c;
}

void PromptCatalog::merge_json(const std::string& text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidConfig, std::string("prompt set is not valid JSON: ") + e.what());
    }
    if (!arr.is_array()) {
        raise(ErrorCode::InvalidConfig, "prompt set must be a JSON array");
    }
    for (const json& j : arr) {
        PromptTemplate t;
        t.template_id = j.at("template_id").get<std::string>();
        t.phase = prompt_phase_from_name(j.at("phase").get<std::string>());
        t.body = j.at("body").get<std::string>();
        upsert(std::move(t));
    }
}

AnalysisPlan default_plan(const std::vector<std::string>& extraction_prompt_ids,
                          const PromptCatalog& catalog) {
    static const std::map<std::string, std::vector<std::string>> kSpecific = {
        {"P-1", {"SP-1", "SP-2"}}, {"P-2", {"SP-3", "SP-4"}}, {"P-3", {"SP-5", "SP-6"}},
        {"P-4", {"SP-7"}},         {"P-5", {}},               {"P-6", {"SP-8", "SP-9"}},
    };
    AnalysisPlan plan;
    for (const std::string& id : extraction_prompt_ids) {
        if (!catalog.has(id)) {
            raise(ErrorCode::UnknownPromptId, "prompt " + id + " is not in the catalog");
        }
        AnalysisPlan::Entry entry;
        entry.source_prompt_id = id;
        entry.general_ids = {"GP-1", "GP-2"};
        auto it = kSpecific.find(id);
        if (it != kSpecific.end()) entry.specific_ids = it->second;
        plan.entries.push_back(std::move(entry));
    }
    return plan;
}

} // namespace ceker
