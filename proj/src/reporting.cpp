#include "ceker/reporting.hpp"

#include "ceker/corpus.hpp"
#include "ceker/extraction.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace ceker {

using nlohmann::json;

namespace {

const char* kNoneIdentified = "none identified";

std::string csv_field(const std::string& value) {
    if (value.find(',') == std::string::npos && value.find('"') == std::string::npos &&
        value.find('\n') == std::string::npos) {
        return value;
    }
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

} // namespace

ChartSeries chart_from_table(const std::string& title, const FrequencyTable& table) {
    ChartSeries series;
    series.title = title;
    for (const auto& [term, count] : table.entries) {
        series.rows.emplace_back(term, count);
    }
    std::sort(series.rows.begin(), series.rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return series;
}

std::string emit_chart_data(const ChartSeries& series) {
    std::string csv = "label,count\n";
    for (const auto& [label, count] : series.rows) {
        csv += csv_field(label) + "," + std::to_string(count) + "\n";
    }
    return csv;
}

namespace {

struct ReportInputs {
    std::vector<PaperRecord> records;
    std::vector<std::string> extract_prompt_ids;  // order of first appearance in runlog
    std::map<std::string, AggregateDocument> aggregates;
    std::size_t responses_done = 0;
    OffTopicReport off_topic;
    OutlineSet outlines;
    std::vector<std::pair<std::string, FrequencyTable>> local_tallies;  // (label, table)
    std::vector<std::pair<std::string, std::vector<std::string>>> llm_rankings;  // (step, items)
    std::vector<std::string> ranking_discrepancies;
    std::optional<BaselineComparison> comparison;
    std::vector<std::string> artifact_digests;
};

void markdown_table(std::ostringstream& md, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
    md << "|";
    for (const std::string& h : header) md << " " << h << " |";
    md << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) md << " --- |";
    md << "\n";
    for (const auto& row : rows) {
        md << "|";
        for (const std::string& cell : row) md << " " << cell << " |";
        md << "\n";
    }
}

} // namespace

Report build_report(Project& project, const ReportOptions& options) {
    // Gate: every planned analysis step must be done unless --partial.
    std::vector<std::string> analysis_pending;
    for (const StepRecord& r : project.fold_runlog()) {
        if (starts_with(r.step_id, "analyze:") && r.status != StepStatus::Done) {
            analysis_pending.push_back(r.step_id);
        }
    }
    if (!analysis_pending.empty() && !options.partial) {
        raise(ErrorCode::IncompleteAnalysis,
              std::to_string(analysis_pending.size()) +
                  " analysis steps incomplete (rerun `analyze` or pass --partial)");
    }

    ReportInputs in;
    CorpusStore store(project);
    in.records = store.load();

    std::vector<PaperRecord> included;
    for (const PaperRecord& r : in.records) {
        if (r.included) included.push_back(r);
    }

    std::set<std::string> seen_prompts;
    for (const StepRecord& r : project.fold_runlog()) {
        if (starts_with(r.step_id, "extract:")) {
            std::size_t second = r.step_id.find(':', 8);
            if (second == std::string::npos) continue;
            std::string prompt_id = r.step_id.substr(8, second - 8);
            if (seen_prompts.insert(prompt_id).second) {
                in.extract_prompt_ids.push_back(prompt_id);
            }
            if (r.status == StepStatus::Done) ++in.responses_done;
        }
        if (r.status == StepStatus::Done) {
            for (const ArtifactId& a : r.outputs) in.artifact_digests.push_back(a.digest);
        }
    }
    std::sort(in.artifact_digests.begin(), in.artifact_digests.end());
    in.artifact_digests.erase(
        std::unique(in.artifact_digests.begin(), in.artifact_digests.end()),
        in.artifact_digests.end());

    for (const std::string& prompt_id : in.extract_prompt_ids) {
        try {
            in.aggregates[prompt_id] = aggregate(project, included, prompt_id);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::IncompleteRun || !options.partial) throw;
        }
    }
    if (!included.empty() && !in.extract_prompt_ids.empty()) {
        try {
            in.off_topic = flag_off_topic(project, included, in.extract_prompt_ids,
                                          project.config().terms,
                                          project.config().off_topic_threshold);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::IncompleteRun || !options.partial) throw;
        }
    }

    in.outlines = collect_outlines(project);

    // Local deterministic tallies over the corpus texts, one per vocabulary.
    std::vector<std::string> corpus_texts;
    for (const PaperRecord& r : included) corpus_texts.push_back(r.text);
    for (const auto& [label, path] : project.config().vocabularies) {
        fs::path vocab_path = fs::path(path).is_absolute() ? fs::path(path)
                                                           : project.root() / path;
        auto vocab_text = try_read_file(vocab_path);
        if (!vocab_text) {
            raise(ErrorCode::InvalidConfig, "vocabulary file missing: " + vocab_path.string());
        }
        std::vector<VocabEntry> vocab = load_vocabulary(*vocab_text);
        if (corpus_texts.empty()) {
            in.local_tallies.emplace_back(label, FrequencyTable{});
        } else {
            in.local_tallies.emplace_back(label, tally(corpus_texts, vocab));
        }
    }

    // LLM-reported rankings: list items from the specific-prompt replies.
    for (const StepRecord& r : project.fold_runlog()) {
        if (!starts_with(r.step_id, "analyze:") || r.status != StepStatus::Done) continue;
        if (r.step_id.find(":SP-") == std::string::npos || r.outputs.empty()) continue;
        auto items = extract_list_items(project.get_artifact(r.outputs.front()));
        if (!items.empty()) {
            in.llm_rankings.emplace_back(r.step_id.substr(8), items);
        }
    }

    // Discrepancy scan: paper ids the LLM ranked that the corpus does not hold.
    // Advisory only; the run never fails on it.
    std::set<std::string> known_ids;
    for (const PaperRecord& r : included) known_ids.insert(r.paper_id);
    for (const auto& [step, items] : in.llm_rankings) {
        for (const std::string& item : items) {
            std::size_t pos = 0;
            while ((pos = item.find("paper-", pos)) != std::string::npos) {
                std::size_t end = pos + 6;
                while (end < item.size() && std::isdigit(static_cast<unsigned char>(item[end]))) {
                    ++end;
                }
                if (end > pos + 6) {
                    std::string id = item.substr(pos, end - pos);
                    if (!known_ids.count(id)) {
                        in.ranking_discrepancies.push_back(step + ": unknown " + id);
                    }
                }
                pos = end;
            }
        }
    }

    std::string baseline_path = options.baseline_csv_path.empty()
                                    ? project.config().baseline_csv
                                    : options.baseline_csv_path;
    if (!baseline_path.empty()) {
        fs::path path = fs::path(baseline_path).is_absolute() ? fs::path(baseline_path)
                                                              : project.root() / baseline_path;
        FrequencyTable baseline = load_baseline_csv(read_file(path));
        // Security-features tally is the comparison subject when present.
        const FrequencyTable* ceker_table = nullptr;
        for (const auto& [label, table] : in.local_tallies) {
            if (label == "security_features") ceker_table = &table;
        }
        if (ceker_table == nullptr && !in.local_tallies.empty()) {
            ceker_table = &in.local_tallies.front().second;
        }
        FrequencyTable empty;
        in.comparison = compare_baseline(ceker_table ? *ceker_table : empty, baseline);
    }

    // ---- assemble ----
    Report report;
    json data;

    {
        std::ostringstream md;
        std::map<std::string, int> sources;
        int included_count = 0;
        for (const PaperRecord& r : in.records) {
            sources[paper_source_name(r.source)] += 1;
            if (r.included) ++included_count;
        }
        md << "Papers: " << in.records.size() << " total, " << included_count << " included, "
           << in.records.size() - included_count << " excluded.\n\n";
        if (!in.records.empty()) {
            std::vector<std::vector<std::string>> rows;
            for (const auto& [source, count] : sources) {
                rows.push_back({source, std::to_string(count)});
            }
            markdown_table(md, {"source", "papers"}, rows);
        } else {
            md << kNoneIdentified << "\n";
        }
        report.sections.emplace_back("corpus", md.str());
        data["corpus"] = {{"total", in.records.size()},
                          {"included", included_count},
                          {"excluded", in.records.size() - included_count},
                          {"sources", sources}};
    }

    {
        std::ostringstream md;
        json extraction;
        if (in.aggregates.empty()) {
            md << kNoneIdentified << "\n";
            extraction["responses"] = in.responses_done;
            extraction["prompts"] = json::object();
        } else {
            md << "Responses: " << in.responses_done << " across " << in.aggregates.size()
               << " prompts.\n\n";
            std::vector<std::vector<std::string>> rows;
            json prompts = json::object();
            for (const auto& [prompt_id, doc] : in.aggregates) {
                rows.push_back({prompt_id, std::to_string(doc.blocks.size()),
                                std::to_string(doc.total_word_count)});
                prompts[prompt_id] = {{"responses", doc.blocks.size()},
                                      {"total_word_count", doc.total_word_count}};
            }
            markdown_table(md, {"prompt", "responses", "total words"}, rows);
            extraction["responses"] = in.responses_done;
            extraction["prompts"] = prompts;
        }
        json flagged = json::array();
        if (!in.off_topic.flagged.empty()) {
            md << "\nFlagged as possibly off-topic (mean score below threshold):\n\n";
            for (const auto& [paper_id, mean] : in.off_topic.flagged) {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%.2f", mean);
                md << "- " << paper_id << " (mean " << buf << ")\n";
                flagged.push_back({{"paper_id", paper_id}, {"mean", buf}});
            }
        }
        json unscored = json::array();
        if (!in.off_topic.unscored.empty()) {
            md << "\nUnscored papers (no parsable scores):\n\n";
            for (const std::string& paper_id : in.off_topic.unscored) {
                md << "- " << paper_id << "\n";
                unscored.push_back(paper_id);
            }
        }
        extraction["flagged"] = flagged;
        extraction["unscored"] = unscored;
        report.sections.emplace_back("extraction-summary", md.str());
        data["extraction"] = extraction;
    }

    {
        std::ostringstream md;
        json themes = json::array();
        if (in.outlines.merged.themes.empty()) {
            md << kNoneIdentified << "\n";
        } else {
            std::vector<std::vector<std::string>> rows;
            for (const ThemeEntry& t : in.outlines.merged.themes) {
                rows.push_back({t.name, t.major ? "yes" : "no", t.support});
                themes.push_back({{"name", t.name}, {"major", t.major}, {"support", t.support}});
            }
            markdown_table(md, {"theme", "major", "support"}, rows);
        }
        report.sections.emplace_back("themes", md.str());
        data["themes"] = themes;
    }

    {
        std::ostringstream md;
        json gaps = json::array();
        if (in.outlines.merged.gaps.empty()) {
            md << kNoneIdentified << "\n";
        } else {
            std::vector<std::vector<std::string>> rows;
            for (const GapEntry& g : in.outlines.merged.gaps) {
                rows.push_back({g.name, g.support});
                gaps.push_back({{"name", g.name}, {"support", g.support}});
            }
            markdown_table(md, {"gap", "support"}, rows);
        }
        report.sections.emplace_back("gaps", md.str());
        data["gaps"] = gaps;
    }

    {
        std::ostringstream md;
        json rankings;
        json llm = json::object();
        json local = json::object();
        bool any = false;
        if (!in.llm_rankings.empty()) {
            any = true;
            md << "LLM-reported (parsed from analysis replies; not locally verified):\n\n";
            for (const auto& [step, items] : in.llm_rankings) {
                md << "- " << step << ":\n";
                json arr = json::array();
                for (std::size_t i = 0; i < items.size(); ++i) {
                    md << "  " << i + 1 << ". " << items[i] << "\n";
                    arr.push_back(items[i]);
                }
                llm[step] = arr;
            }
            md << "\n";
        }
        for (const auto& [label, table] : in.local_tallies) {
            any = true;
            md << "Local exact-phrase tally over the corpus (" << label << "):\n\n";
            ChartSeries series = chart_from_table(label, table);
            std::vector<std::vector<std::string>> rows;
            json arr = json::array();
            for (const auto& [term, count] : series.rows) {
                rows.push_back({term, std::to_string(count)});
                arr.push_back({{"term", term}, {"count", count}});
            }
            markdown_table(md, {"term", "count"}, rows);
            md << "\n";
            local[label] = arr;
        }
        if (!in.llm_rankings.empty()) {
            if (in.ranking_discrepancies.empty()) {
                md << "Ranking discrepancies: none\n";
            } else {
                md << "Ranking discrepancies (LLM ranked papers the corpus does not hold):\n\n";
                for (const std::string& d : in.ranking_discrepancies) {
                    md << "- " << d << "\n";
                }
            }
        }
        if (!any) md << kNoneIdentified << "\n";
        rankings["llm_reported"] = llm;
        rankings["local"] = local;
        rankings["discrepancies"] = in.ranking_discrepancies;
        report.sections.emplace_back("rankings", md.str());
        data["rankings"] = rankings;
    }

    {
        std::ostringstream md;
        json comparison;
        if (!in.comparison) {
            md << kNoneIdentified << "\n";
            comparison = nullptr;
        } else {
            std::vector<std::vector<std::string>> rows;
            json arr = json::array();
            for (const auto& row : in.comparison->rows) {
                rows.push_back({row.term, std::to_string(row.ceker_count),
                                std::to_string(row.baseline_count), std::to_string(row.delta)});
                arr.push_back({{"term", row.term},
                               {"ceker_count", row.ceker_count},
                               {"baseline_count", row.baseline_count},
                               {"delta", row.delta}});
            }
            markdown_table(md, {"term", "ceker", "baseline", "delta"}, rows);
            md << "\nOverlap terms: ";
            if (in.comparison->overlap_terms.empty()) {
                md << "none\n";
            } else {
                md << join(in.comparison->overlap_terms, ", ") << "\n";
            }
            comparison = {{"rows", arr}, {"overlap_terms", in.comparison->overlap_terms}};
        }
        report.sections.emplace_back("comparison", md.str());
        data["comparison"] = comparison;
    }

    {
        std::ostringstream md;
        const CekerConfig& config = project.config();
        md << "Backend: " << config.backend << ", model: " << config.model
           << ", seed: " << config.seed << ", temperature: " << config.temperature << ".\n\n";
        md << "Config digest: " << project.manifest().config_digest << "\n\n";
        md << "Artifacts consumed (" << in.artifact_digests.size() << "):\n\n";
        for (const std::string& digest : in.artifact_digests) {
            md << "- " << digest << "\n";
        }
        report.sections.emplace_back("provenance", md.str());
        data["provenance"] = {{"backend", config.backend},
                              {"model", config.model},
                              {"seed", config.seed},
                              {"temperature", config.temperature},
                              {"config_digest", project.manifest().config_digest},
                              {"artifacts", in.artifact_digests}};
    }

    // ---- write ----
    std::ostringstream md;
    md << "# CEKER report\n\n";
    md << "Topic: " << project.manifest().topic << "\n\n";
    for (const auto& [section_id, content] : report.sections) {
        md << "## " << section_id << "\n\n" << content << "\n";
    }
    std::string report_md = md.str();

    json out;
    out["topic"] = project.manifest().topic;
    json section_ids = json::array();
    for (const auto& [section_id, content] : report.sections) section_ids.push_back(section_id);
    out["sections"] = section_ids;
    out["data"] = data;
    std::string report_json = out.dump(2) + "\n";

    ensure_dir(project.report_dir() / "charts");
    write_file_atomic(project.report_dir() / "report.md", report_md);
    write_file_atomic(project.report_dir() / "report.json", report_json);
    report.data_files.emplace_back("report.md", report_md);
    report.data_files.emplace_back("report.json", report_json);
    for (const auto& [label, table] : in.local_tallies) {
        std::string csv = emit_chart_data(chart_from_table(label, table));
        write_file_atomic(project.report_dir() / "charts" / (label + ".csv"), csv);
        report.data_files.emplace_back("charts/" + label + ".csv", csv);
    }
    return report;
}

} // namespace ceker
