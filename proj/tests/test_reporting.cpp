#include "ceker/reporting.hpp"

#include "ceker/corpus.hpp"
#include "ceker/extraction.hpp"
#include "ceker/pipeline.hpp"

#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>

using namespace ceker;
using nlohmann::json;

TEST_CASE("chart series sorts by count descending with lexicographic ties") {
    FrequencyTable table;
    table.entries = {{"DEP", 2}, {"ASLR", 5}, {"B", 3}, {"A", 3}};
    ChartSeries series = chart_from_table("features", table);
    REQUIRE(series.rows.size() == 4);
    CHECK(series.rows[0].first == "ASLR");
    CHECK(series.rows[1].first == "A");
    CHECK(series.rows[2].first == "B");
    CHECK(series.rows[3].first == "DEP");
}

TEST_CASE("chart CSV format") {
    ChartSeries series;
    series.rows = {{"ASLR", 5}, {"DEP", 2}};
    CHECK(emit_chart_data(series) == "label,count\nASLR,5\nDEP,2\n");

    ChartSeries empty;
    CHECK(emit_chart_data(empty) == "label,count\n");

    ChartSeries quoted;
    quoted.rows = {{"a, b", 1}};
    CHECK(emit_chart_data(quoted) == "label,count\n\"a, b\",1\n");
}

namespace {

// A miniature complete project: 2 papers, 2 extract prompts, mock analysis.
struct ReportHarness {
    fs::path dir;
    std::unique_ptr<Project> project;

    ReportHarness() {
        dir = oracles::make_temp_dir("ceker-report");
        fs::path rules = dir / "rules.json";
        {
            std::ofstream out(rules);
            out << R"([
  {"contains": "Using the above summaries", "response": "### Themes\n1. **Reduced Attack Surface**: small images.\n2. **Isolation**: boundaries.\n3. **Immutable infrastructure**: rebuilds.\n4. Performance-security balance: tradeoffs.\n5. Customization and Adaptability: tailored.\n6. Advanced Security Features: extras.\n\n### Gaps\n1. **Missing Traditional OS Features**: absent.\n2. Difficulty Debugging: few tools.\n3. Dependency on Hypervisors: host reliance.\n"},
  {"contains": "top three unikernels", "response": "1. Unikraft\n2. MirageOS\n3. OSv\n"},
  {"contains": "for each of the security terms", "response": "ASLR: 0.40\nDEP: 0.20\nStack Canaries: 0.10\n"},
  {"contains": "", "response": "generic [{{DIGEST8}}]"}
])";
        }
        fs::path vocab = dir / "vocab.json";
        {
            std::ofstream out(vocab);
            out << R"([{"term": "ASLR"}, {"term": "unikraft"}])";
        }
        fs::path baseline = dir / "baseline.csv";
        {
            std::ofstream out(baseline);
            out << "term,count\nseccomp,4\n";
        }

        std::string toml = CekerConfig::default_toml("report topic");
        toml += "\n[gateway]\nmock_rules = \"" + rules.string() + "\"\n";
        toml += "\n[analysis]\nbaseline = \"" + baseline.string() + "\"\n";
        toml += "\n[vocab]\nsecurity_features = \"" + vocab.string() + "\"\n";
        project = std::make_unique<Project>(Project::init(dir / "proj", toml));

        CorpusStore store(*project);
        std::vector<PaperRecord> papers;
        for (int i = 1; i <= 2; ++i) {
            PaperRecord r;
            r.paper_id = make_paper_id(i);
            r.title = "Paper " + std::to_string(i);
            r.text = "ASLR appears here; unikraft too. Paper body " + std::to_string(i) + ".\n";
            r.source = PaperSource::Reused;
            papers.push_back(r);
        }
        store.save(papers);
    }
    ~ReportHarness() { fs::remove_all(dir); }

    void run() {
        PipelineSetup setup = load_pipeline_setup(*project);
        Gateway gateway = make_gateway(*project);
        phase_extract(*project, setup, gateway);
        phase_analyze(*project, setup, gateway);
    }
};

} // namespace

TEST_CASE("build_report assembles fixed sections with mirrored JSON") {
    ReportHarness h;
    h.run();
    Report report = build_report(*h.project);

    std::vector<std::string> ids;
    for (const auto& [id, content] : report.sections) ids.push_back(id);
    CHECK(ids == std::vector<std::string>{"corpus", "extraction-summary", "themes", "gaps",
                                          "rankings", "comparison", "provenance"});

    std::string md = read_file(h.project->report_dir() / "report.md");
    json data = json::parse(read_file(h.project->report_dir() / "report.json"));

    // themes table: 6 rows, 3 major
    CHECK(data["data"]["themes"].size() == 6);
    int majors = 0;
    for (const auto& t : data["data"]["themes"]) {
        if (t["major"].get<bool>()) ++majors;
    }
    CHECK(majors == 3);
    CHECK(md.find("Reduced Attack Surface") != std::string::npos);
    CHECK(data["data"]["gaps"].size() == 3);

    // numbers in markdown appear in JSON
    CHECK(data["data"]["corpus"]["total"] == 2);
    CHECK(md.find("Papers: 2 total") != std::string::npos);
    CHECK(data["data"]["extraction"]["responses"].get<int>() == 12);

    // local tally mirrored: ASLR counted in both corpus texts
    bool found = false;
    for (const auto& row : data["data"]["rankings"]["local"]["security_features"]) {
        if (row["term"] == "ASLR") {
            CHECK(row["count"] == 2);
            found = true;
        }
    }
    CHECK(found);
    CHECK(fs::exists(h.project->report_dir() / "charts" / "security_features.csv"));

    // comparison: baseline disjoint from tally, no overlap
    CHECK(data["data"]["comparison"]["overlap_terms"].empty());

    // provenance carries backend config and consumed digests
    CHECK(data["data"]["provenance"]["backend"] == "mock");
    CHECK(data["data"]["provenance"]["artifacts"].size() > 0);
}

TEST_CASE("report on an empty project says none identified") {
    fs::path dir = oracles::make_temp_dir("ceker-report");
    Project project = Project::init(dir, CekerConfig::default_toml("empty topic"));
    Report report = build_report(project);
    std::string md = read_file(project.report_dir() / "report.md");
    CHECK(md.find("none identified") != std::string::npos);
    json data = json::parse(read_file(project.report_dir() / "report.json"));
    CHECK(data["data"]["themes"].empty());
    CHECK(data["data"]["comparison"].is_null());
    fs::remove_all(dir);
}

TEST_CASE("build_report is byte-deterministic over fixed artifacts") {
    ReportHarness h;
    h.run();
    build_report(*h.project);
    std::string first = oracles::tree_digest(h.project->report_dir());
    build_report(*h.project);
    CHECK(oracles::tree_digest(h.project->report_dir()) == first);
}

TEST_CASE("incomplete analysis blocks the report unless --partial") {
    ReportHarness h;
    {
        PipelineSetup setup = load_pipeline_setup(*h.project);
        Gateway gateway = make_gateway(*h.project);
        phase_extract(*h.project, setup, gateway);
        ensure_full_plan(*h.project, setup);  // plans analyze steps, none done
    }
    try {
        build_report(*h.project);
        FAIL("expected IncompleteAnalysis");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IncompleteAnalysis);
    }
    ReportOptions partial;
    partial.partial = true;
    Report report = build_report(*h.project, partial);
    CHECK(report.sections.size() == 7);
}
