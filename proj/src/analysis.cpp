#include "ceker/analysis.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace ceker {

using nlohmann::json;

// ---- outline parsing ----------------------------------------------------------

namespace {

// Returns the item text when the line is a numbered or bulleted list item.
std::optional<std::string> list_item_text(const std::string& raw) {
    std::string line = trim(raw);
    if (line.empty()) return std::nullopt;
    if (line[0] == '-' || line[0] == '*' || line[0] == '+') {
        if (line.size() > 1 && line[1] == ' ') return trim(line.substr(2));
        return std::nullopt;
    }
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
        return trim(line.substr(i + 1));
    }
    return std::nullopt;
}

// Heading text for `# ...` lines, fully bold lines and `...:` label lines.
std::optional<std::string> heading_text(const std::string& raw) {
    std::string line = trim(raw);
    if (line.empty()) return std::nullopt;
    if (line[0] == '#') {
        std::size_t i = 0;
        while (i < line.size() && line[i] == '#') ++i;
        return trim(line.substr(i));
    }
    if (list_item_text(line)) return std::nullopt;
    std::string unbold = line;
    if (starts_with(unbold, "**") && ends_with(unbold, "**") && unbold.size() > 4) {
        unbold = trim(unbold.substr(2, unbold.size() - 4));
    }
    if (!unbold.empty() && unbold.back() == ':' && word_count(unbold) <= 8) {
        return trim(unbold.substr(0, unbold.size() - 1));
    }
    return std::nullopt;
}

// Splits an item into (name, major, support): bold prefix marks major, the
// first colon or space-padded dash starts the support text.
void split_item(const std::string& item, std::string& name, bool& major, std::string& support) {
    std::string text = item;
    major = false;
    if (starts_with(text, "**")) {
        std::size_t close = text.find("**", 2);
        if (close != std::string::npos) {
            major = true;
            name = trim(text.substr(2, close - 2));
            std::string rest = trim(text.substr(close + 2));
            if (!rest.empty() && (rest[0] == ':' || rest[0] == '-')) {
                rest = trim(rest.substr(1));
            } else if (starts_with(rest, "–") || starts_with(rest, "—")) {
                rest = trim(rest.substr(3));
            }
            if (!name.empty() && name.back() == ':') name = trim(name.substr(0, name.size() - 1));
            support = rest;
            return;
        }
    }
    std::size_t sep_at = std::string::npos;
    std::size_t sep_len = 0;
    auto consider = [&](std::string_view sep) {
        std::size_t at = text.find(sep.data(), 0, sep.size());
        if (at != std::string::npos && at < sep_at) {
            sep_at = at;
            sep_len = sep.size();
        }
    };
    consider(":");
    consider(" - ");
    consider(" – ");
    consider(" — ");
    if (sep_at == std::string::npos) {
        name = trim(text);
        support.clear();
        return;
    }
    name = trim(text.substr(0, sep_at));
    support = trim(text.substr(sep_at + sep_len));
}

enum class Section { None, Themes, Gaps };

} // namespace

Outline parse_outline(const std::string& reply_text) {
    Outline outline;
    Section section = Section::None;
    for (const std::string& line : split_lines(reply_text)) {
        if (auto heading = heading_text(line)) {
            std::string lower = to_lower_ascii(*heading);
            if (contains(lower, "theme")) {
                section = Section::Themes;
            } else if (contains(lower, "gap")) {
                section = Section::Gaps;
            } else {
                section = Section::None;
            }
            continue;
        }
        auto item = list_item_text(line);
        if (!item || section == Section::None) continue;
        std::string name;
        std::string support;
        bool major = false;
        split_item(*item, name, major, support);
        if (name.empty()) continue;
        if (section == Section::Themes) {
            outline.themes.push_back({name, major, support});
        } else {
            outline.gaps.push_back({name, support});
        }
    }
    return outline;
}

std::vector<std::string> extract_list_items(const std::string& reply_text) {
    std::vector<std::string> items;
    for (const std::string& line : split_lines(reply_text)) {
        if (auto item = list_item_text(line)) {
            std::string text = *item;
            // strip emphasis markers at the edges
            while (starts_with(text, "**") && ends_with(text, "**") && text.size() > 4) {
                text = trim(text.substr(2, text.size() - 4));
            }
            if (!text.empty()) items.push_back(text);
        }
    }
    return items;
}

// ---- vocabulary / tally ---------------------------------------------------------

std::vector<VocabEntry> load_vocabulary(const std::string& json_text) {
    json arr;
    try {
        arr = json::parse(json_text);
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidConfig, std::string("vocabulary is not valid JSON: ") + e.what());
    }
    std::vector<VocabEntry> vocab;
    for (const json& j : arr) {
        VocabEntry e;
        e.term = j.at("term").get<std::string>();
        if (j.contains("synonyms")) {
            for (const json& s : j["synonyms"]) e.synonyms.push_back(s.get<std::string>());
        }
        vocab.push_back(std::move(e));
    }
    return vocab;
}

namespace {

bool alnum_at(const std::string& text, std::size_t index) {
    return index < text.size() && std::isalnum(static_cast<unsigned char>(text[index])) != 0;
}

// Non-overlapping left-to-right whole-phrase occurrences, both lowercased.
// Whole phrase: the match may not butt against alphanumerics on either side,
// so "DEP" never counts inside "deployment".
std::int64_t count_phrase(const std::string& lower_text, const std::string& phrase) {
    std::string lower_phrase = to_lower_ascii(phrase);
    if (lower_phrase.empty()) return 0;
    std::int64_t count = 0;
    std::size_t pos = 0;
    while ((pos = lower_text.find(lower_phrase, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !alnum_at(lower_text, pos - 1);
        bool right_ok = !alnum_at(lower_text, pos + lower_phrase.size());
        if (left_ok && right_ok) {
            ++count;
            pos += lower_phrase.size();
        } else {
            ++pos;
        }
    }
    return count;
}

} // namespace

FrequencyTable tally(const std::vector<std::string>& texts,
                     const std::vector<VocabEntry>& vocabulary) {
    if (vocabulary.empty()) {
        raise(ErrorCode::EmptyVocabulary, "tally needs at least one vocabulary term");
    }
    FrequencyTable table;
    std::vector<std::string> lowered;
    lowered.reserve(texts.size());
    for (const std::string& t : texts) lowered.push_back(to_lower_ascii(t));

    for (const VocabEntry& entry : vocabulary) {
        std::int64_t total = 0;
        for (const std::string& text : lowered) {
            total += count_phrase(text, entry.term);
            for (const std::string& synonym : entry.synonyms) {
                total += count_phrase(text, synonym);
            }
        }
        table.entries[entry.term] += total;
    }
    return table;
}

BaselineComparison compare_baseline(const FrequencyTable& ceker, const FrequencyTable& baseline) {
    std::set<std::string> terms;
    for (const auto& [term, count] : ceker.entries) terms.insert(term);
    for (const auto& [term, count] : baseline.entries) terms.insert(term);

    BaselineComparison cmp;
    for (const std::string& term : terms) {
        BaselineComparison::Row row;
        row.term = term;
        auto c = ceker.entries.find(term);
        auto b = baseline.entries.find(term);
        row.ceker_count = c == ceker.entries.end() ? 0 : c->second;
        row.baseline_count = b == baseline.entries.end() ? 0 : b->second;
        row.delta = row.ceker_count - row.baseline_count;
        if (row.ceker_count != 0 && row.baseline_count != 0) {
            cmp.overlap_terms.push_back(term);
        }
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

FrequencyTable load_baseline_csv(const std::string& csv_text) {
    std::vector<std::string> lines = split_lines(csv_text);
    if (lines.empty() || trim(lines[0]) != "term,count") {
        raise(ErrorCode::InvalidConfig, "baseline CSV must start with header `term,count`");
    }
    FrequencyTable table;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        std::size_t comma = line.rfind(',');
        if (comma == std::string::npos) {
            raise(ErrorCode::InvalidConfig, "baseline CSV line " + std::to_string(i + 1) +
                                                " has no count column");
        }
        std::string term = trim(line.substr(0, comma));
        if (term.size() >= 2 && term.front() == '"' && term.back() == '"') {
            term = term.substr(1, term.size() - 2);
            std::string unescaped;
            for (std::size_t k = 0; k < term.size(); ++k) {
                if (term[k] == '"' && k + 1 < term.size() && term[k + 1] == '"') ++k;
                unescaped += term[k];
            }
            term = unescaped;
        }
        table.entries[term] = std::atoll(line.c_str() + comma + 1);
    }
    return table;
}

// ---- analysis run ----------------------------------------------------------------

std::string analysis_step_id(const std::string& source_prompt_id, const std::string& analysis_id) {
    return "analyze:" + source_prompt_id + ":" + analysis_id;
}

AnalysisRunSummary run_analysis(Project& project, const AnalysisPlan& plan,
                                const PromptCatalog& catalog, Gateway& gateway, int parallelism) {
    struct SessionPlan {
        std::string source_id;
        std::string document;
        std::size_t n_responses = 0;
        std::vector<std::string> analysis_ids;
    };

    std::vector<SessionPlan> sessions;
    for (const AnalysisPlan::Entry& entry : plan.entries) {
        SessionPlan sp;
        sp.source_id = entry.source_prompt_id;
        fs::path doc_path = project.aggregates_dir() / (entry.source_prompt_id + ".md");
        auto doc = try_read_file(doc_path);
        if (!doc) {
            raise(ErrorCode::MissingAggregate,
                  "no aggregate document for " + entry.source_prompt_id + " (" +
                      doc_path.string() + ")");
        }
        sp.document = std::move(*doc);
        auto meta = try_read_file(project.aggregates_dir() / (entry.source_prompt_id + ".meta.json"));
        if (meta) {
            sp.n_responses = json::parse(*meta).value("blocks", json::array()).size();
        }
        sp.analysis_ids = entry.general_ids;
        sp.analysis_ids.insert(sp.analysis_ids.end(), entry.specific_ids.begin(),
                               entry.specific_ids.end());
        sessions.push_back(std::move(sp));
    }

    for (const SessionPlan& sp : sessions) {
        for (const std::string& id : sp.analysis_ids) {
            project.log_pending(analysis_step_id(sp.source_id, id));
        }
    }

    std::map<std::string, StepRecord> status;
    for (StepRecord& r : project.fold_runlog()) status[r.step_id] = r;

    AnalysisRunSummary summary;
    for (const SessionPlan& sp : sessions) summary.steps_total += sp.analysis_ids.size();
    std::mutex summary_mutex;

    Bindings shared = {{"TERMS", join_terms(project.config().terms)},
                       {"TOPIC", project.config().topic}};

    parallel_for_each(sessions.size(), parallelism, [&](std::size_t index) {
        const SessionPlan& sp = sessions[index];
        Session session = gateway.open_session("analyze:" + sp.source_id);
        ensure_dir(project.analysis_dir() / sp.source_id);

        Bindings available = shared;
        available["N_RESPONSES"] = std::to_string(sp.n_responses);

        for (std::size_t k = 0; k < sp.analysis_ids.size(); ++k) {
            const std::string& analysis_id = sp.analysis_ids[k];
            const PromptTemplate& tmpl = catalog.get(analysis_id);
            std::string prompt = render(tmpl, bindings_subset(tmpl, available));
            std::string message =
                k == 0 ? frame_document("aggregate:" + sp.source_id, sp.document) + "\n\n" + prompt
                       : prompt;
            std::string step_id = analysis_step_id(sp.source_id, analysis_id);

            auto it = status.find(step_id);
            if (it != status.end() && it->second.status == StepStatus::Done) {
                std::string reply = project.get_artifact(it->second.outputs.at(0));
                session.push_exchange(message, reply);
                std::lock_guard<std::mutex> lock(summary_mutex);
                ++summary.steps_replayed;
                continue;
            }

            try {
                LlmResponse reply = gateway.send(session, message);
                ArtifactId artifact = project.put_artifact("analysis-response", reply.text);
                write_file_atomic(project.analysis_dir() / sp.source_id / (analysis_id + ".md"),
                                  reply.text);
                project.log_done(step_id, {}, {artifact});
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Aborted) {
                    project.log_failed(step_id, e.what());
                }
                throw;
            }
            {
                std::lock_guard<std::mutex> lock(summary_mutex);
                ++summary.steps_executed;
            }
            count_completed_step();
        }
    });

    return summary;
}

OutlineSet collect_outlines(Project& project) {
    OutlineSet set;
    for (const StepRecord& r : project.fold_runlog()) {
        if (!starts_with(r.step_id, "analyze:") || r.status != StepStatus::Done) continue;
        std::size_t second = r.step_id.find(':', 8);
        if (second == std::string::npos || r.outputs.empty()) continue;
        OutlineSet::ReplyOutline reply;
        reply.source_id = r.step_id.substr(8, second - 8);
        reply.analysis_id = r.step_id.substr(second + 1);
        reply.outline = parse_outline(project.get_artifact(r.outputs.front()));
        set.per_reply.push_back(std::move(reply));
    }

    for (const auto& reply : set.per_reply) {
        for (const ThemeEntry& theme : reply.outline.themes) {
            auto it = std::find_if(set.merged.themes.begin(), set.merged.themes.end(),
                                   [&](const ThemeEntry& t) { return t.name == theme.name; });
            if (it == set.merged.themes.end()) {
                set.merged.themes.push_back(theme);
            } else if (theme.major) {
                it->major = true;
            }
        }
        for (const GapEntry& gap : reply.outline.gaps) {
            auto it = std::find_if(set.merged.gaps.begin(), set.merged.gaps.end(),
                                   [&](const GapEntry& g) { return g.name == gap.name; });
            if (it == set.merged.gaps.end()) set.merged.gaps.push_back(gap);
        }
    }
    return set;
}

namespace {

json outline_to_json(const Outline& outline) {
    json themes = json::array();
    for (const ThemeEntry& t : outline.themes) {
        themes.push_back({{"name", t.name}, {"major", t.major}, {"support", t.support}});
    }
    json gaps = json::array();
    for (const GapEntry& g : outline.gaps) {
        gaps.push_back({{"name", g.name}, {"support", g.support}});
    }
    return {{"themes", themes}, {"gaps", gaps}};
}

} // namespace

std::string outline_set_json(const OutlineSet& set) {
    json per_reply = json::array();
    for (const auto& reply : set.per_reply) {
        per_reply.push_back({{"source_id", reply.source_id},
                             {"analysis_id", reply.analysis_id},
                             {"outline", outline_to_json(reply.outline)}});
    }
    json j = {{"per_reply", per_reply}, {"merged", outline_to_json(set.merged)}};
    return j.dump(2) + "\n";
}

} // namespace ceker
