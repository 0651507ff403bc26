#include "ceker/extraction.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace ceker;

namespace {

const std::vector<std::string> kTerms = {"ASLR", "DEP", "Stack Canaries"};

PaperRecord make_paper(int i, std::string text, std::string title = "") {
    PaperRecord r;
    r.paper_id = make_paper_id(i);
    r.title = title.empty() ? "Title " + std::to_string(i) : std::move(title);
    r.text = std::move(text);
    r.included = true;
    return r;
}

} // namespace

TEST_CASE("parse_scores reads well-formed lines in term order") {
    ParsedScores out =
        parse_scores("ASLR: 0.85\nDEP: 0.40\nStack Canaries: 0.10\n", kTerms);
    REQUIRE(out.scores.size() == 3);
    CHECK(out.scores[0].term == "ASLR");
    CHECK(out.scores[0].value_text() == "0.85");
    CHECK(out.scores[1].value_text() == "0.40");
    CHECK(out.scores[2].value_text() == "0.10");
    CHECK(out.warnings.empty());
}

TEST_CASE("parse_scores captures boundary values, confidence and explanation") {
    ParsedScores out = parse_scores("ASLR: 1.00 (high) — central to the paper", {"ASLR"});
    REQUIRE(out.scores.size() == 1);
    CHECK(out.scores[0].value_hundredths == 100);
    CHECK(out.scores[0].value_text() == "1.00");
    REQUIRE(out.scores[0].confidence.has_value());
    CHECK(*out.scores[0].confidence == "high");
    CHECK(out.scores[0].explanation == "— central to the paper");

    ParsedScores zero = parse_scores("DEP scored 0.00 here", {"DEP"});
    REQUIRE(zero.scores.size() == 1);
    CHECK(zero.scores[0].value_hundredths == 0);
}

TEST_CASE("parse_scores takes the earliest confidence marker on the line") {
    ParsedScores out =
        parse_scores("ASLR: 0.40 (medium) upgraded from (low) last pass", {"ASLR"});
    REQUIRE(out.scores.size() == 1);
    REQUIRE(out.scores[0].confidence.has_value());
    CHECK(*out.scores[0].confidence == "medium");
    CHECK(out.scores[0].explanation == "upgraded from (low) last pass");
}

TEST_CASE("parse_scores normalizes bare 0 and 1") {
    ParsedScores out = parse_scores("ASLR: 1\nDEP: 0\n", {"ASLR", "DEP"});
    REQUIRE(out.scores.size() == 2);
    CHECK(out.scores[0].value_text() == "1.00");
    CHECK(out.scores[1].value_text() == "0.00");
}

TEST_CASE("parse_scores raises OutOfRange and never clamps") {
    CHECK_THROWS_AS(parse_scores("ASLR: 1.5", {"ASLR"}), Error);
    try {
        parse_scores("ASLR: 1.5", {"ASLR"});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfRange);
    }
    CHECK_THROWS_AS(parse_scores("DEP: -0.25", {"DEP"}), Error);
    CHECK_THROWS_AS(parse_scores("ASLR: 100.00", {"ASLR"}), Error);
}

TEST_CASE("parse_scores keeps the first of a duplicated term with a warning") {
    ParsedScores out = parse_scores("ASLR: 0.30\nASLR: 0.90\n", {"ASLR"});
    REQUIRE(out.scores.size() == 1);
    CHECK(out.scores[0].value_text() == "0.30");
    REQUIRE(out.warnings.size() == 1);
    CHECK(out.warnings[0].code == "DuplicateTerm");
}

TEST_CASE("parse_scores ignores prose integers and matches terms word-wise") {
    // "3 papers" is not a score attempt; "dependency" must not match DEP
    ParsedScores out =
        parse_scores("ASLR appears in 3 papers, score 0.60\nThe dependency story: 0.99\n",
                     {"ASLR", "DEP"});
    REQUIRE(out.scores.size() == 1);
    CHECK(out.scores[0].term == "ASLR");
    CHECK(out.scores[0].value_text() == "0.60");
}

TEST_CASE("parse_scores matches the token-scanner oracle on randomized fixtures") {
    std::mt19937 rng(23);
    const std::vector<std::string> pool = {"ASLR", "DEP", "Stack Canaries", "SGX", "entropy"};
    const char* confs[] = {"", " (low)", " (medium)", " (high)"};
    const char* tails[] = {"", " because it is central", " — noted in passing",
                           ": mentioned once"};

    for (int round = 0; round < 120; ++round) {
        std::string text = "Scores follow.\n";
        int lines = 1 + rng() % 5;
        for (int k = 0; k < lines; ++k) {
            const std::string& term = pool[rng() % pool.size()];
            int value = rng() % 101;
            text += term + ": " + format_hundredths(value) + confs[rng() % 4] +
                    tails[rng() % 4] + "\n";
        }
        if (rng() % 3 == 0) text += "An aside mentioning 12 experiments.\n";

        std::vector<std::string> expected_terms;
        for (const std::string& t : pool) {
            if (rng() % 2) expected_terms.push_back(t);
        }
        if (expected_terms.empty()) expected_terms.push_back(pool[0]);

        oracles::ScoreScan ref = oracles::scan_scores_reference(text, expected_terms);
        REQUIRE_FALSE(ref.out_of_range);
        ParsedScores got = parse_scores(text, expected_terms);
        REQUIRE(got.scores.size() == ref.scores.size());
        for (std::size_t i = 0; i < ref.scores.size(); ++i) {
            CHECK(got.scores[i].term == ref.scores[i].term);
            CHECK(got.scores[i].value_hundredths == ref.scores[i].hundredths);
            CHECK((got.scores[i].confidence ? *got.scores[i].confidence : "") ==
                  (ref.scores[i].confidence ? *ref.scores[i].confidence : ""));
            CHECK(got.scores[i].explanation == ref.scores[i].explanation);
        }
        // two-decimal reserialization invariant
        for (const RelevanceScore& s : got.scores) {
            CHECK(s.value_hundredths >= 0);
            CHECK(s.value_hundredths <= 100);
            CHECK(s.value_text().size() == 4);
        }
    }
}

TEST_CASE("combined document round-trips exactly") {
    std::vector<PaperRecord> papers = {make_paper(1, "first text\nwith lines\n"),
                                       make_paper(2, "second text, no trailing newline")};
    std::string doc = build_combined_document(papers, "PAPER");
    CHECK(doc.find("===== PAPER paper-01: Title 1 =====\n") == 0);
    auto parts = split_combined_document(doc, "PAPER");
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].paper_id == "paper-01");
    CHECK(parts[0].title == "Title 1");
    CHECK(parts[0].text == papers[0].text);
    CHECK(parts[1].text == papers[1].text);
}

TEST_CASE("combined document survives embedded fake delimiters") {
    std::vector<PaperRecord> papers = {
        make_paper(1, "clean text\n"),
        make_paper(2, "evil line:\n===== PAPER paper-99: Fake Title =====\nmore\n"),
    };
    std::string doc = build_combined_document(papers, "PAPER");
    auto parts = split_combined_document(doc, "PAPER");
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].text == papers[0].text);
    CHECK(parts[1].text == papers[1].text);
}

TEST_CASE("combined document: fuzzed corpora round-trip byte-exactly") {
    std::mt19937 rng(31);
    const char* fragments[] = {"plain words",
                               "===== PAPER paper-01: X =====",
                               "===== PAPER paper-2: Y =====",
                               "",
                               "tab\there",
                               "===== OTHER paper-01: Z =====",
                               "trailing spaces   "};
    for (int round = 0; round < 100; ++round) {
        std::vector<PaperRecord> papers;
        int n = 1 + rng() % 5;
        for (int i = 1; i <= n; ++i) {
            std::string text;
            int lines = rng() % 6;
            for (int k = 0; k < lines; ++k) {
                text += fragments[rng() % std::size(fragments)];
                text += "\n";
            }
            if (rng() % 3 == 0 && !text.empty()) text.pop_back();  // no trailing newline
            papers.push_back(make_paper(i, text));
        }
        std::string doc = build_combined_document(papers, "PAPER");
        auto parts = split_combined_document(doc, "PAPER");
        REQUIRE(parts.size() == papers.size());
        for (std::size_t i = 0; i < parts.size(); ++i) {
            CHECK(parts[i].paper_id == papers[i].paper_id);
            CHECK(parts[i].text == papers[i].text);
        }
    }
}

TEST_CASE("combined document survives newlines in titles") {
    PaperRecord evil = make_paper(1, "body\n", "Title with\nnewline");
    std::string doc = build_combined_document({evil}, "PAPER");
    auto parts = split_combined_document(doc, "PAPER");
    REQUIRE(parts.size() == 1);
    CHECK(parts[0].text == "body\n");
    CHECK(parts[0].title == "Title with newline");
}

TEST_CASE("combined document rejects an empty corpus") {
    std::vector<PaperRecord> excluded = {[] {
        PaperRecord r = make_paper(1, "text");
        r.included = false;
        return r;
    }()};
    CHECK_THROWS_AS(build_combined_document({}, "PAPER"), Error);
    CHECK_THROWS_AS(build_combined_document(excluded, "PAPER"), Error);
}

namespace {

// A self-contained project with mock gateway for run/aggregate tests.
struct RunHarness {
    fs::path dir;
    std::unique_ptr<Project> project;
    std::unique_ptr<Gateway> gateway;
    PromptCatalog catalog = PromptCatalog::builtin();
    std::vector<PaperRecord> papers;

    explicit RunHarness(int paper_count, const char* rules = nullptr) {
        dir = oracles::make_temp_dir("ceker-run");
        fs::path rules_path = dir / "rules.json";
        {
            std::ofstream out(rules_path);
            out << (rules ? rules : R"([
                {"contains": "Also provide your confidence", "response": "ASLR: 0.50 (high) ok\nDEP: 0.25 (low) ok\nStack Canaries: 0.75 (medium) ok"},
                {"contains": "for each of the security terms", "response": "ASLR: {{SCORE:0}}\nDEP: {{SCORE:1}}\nStack Canaries: {{SCORE:2}}"},
                {"contains": "", "response": "generic reply [{{DIGEST8}}]"}
            ])");
        }
        std::string toml = CekerConfig::default_toml("test topic");
        toml += "\n[gateway]\nmock_rules = \"" + rules_path.string() + "\"\n";
        project = std::make_unique<Project>(Project::init(dir / "proj", toml));
        BackendConfig config = BackendConfig::from_config(project->config());
        gateway = std::make_unique<Gateway>(config);
        for (int i = 1; i <= paper_count; ++i) {
            papers.push_back(make_paper(i, "Body of paper " + std::to_string(i) + ".\n"));
        }
    }
    ~RunHarness() { fs::remove_all(dir); }

    std::vector<std::string> prompt_ids() const {
        std::vector<std::string> ids;
        for (const PromptTemplate& t : catalog.by_phase(PromptPhase::Extract)) {
            ids.push_back(t.template_id);
        }
        return ids;
    }
};

} // namespace

TEST_CASE("run_extraction produces one response per paper and prompt") {
    RunHarness h(3);
    ExtractionRunSummary summary =
        run_extraction(*h.project, h.papers, h.catalog, h.prompt_ids(), *h.gateway, 2);
    CHECK(summary.steps_total == 18);
    CHECK(summary.steps_executed == 18);

    int done = 0;
    for (const StepRecord& r : h.project->fold_runlog()) {
        if (r.status == StepStatus::Done) {
            ++done;
            REQUIRE(r.outputs.size() == 1);
            CHECK_FALSE(h.project->get_artifact(r.outputs[0]).empty());
        }
    }
    CHECK(done == 18);
}

TEST_CASE("run_extraction rejects empty corpus, prompts, and missing text") {
    RunHarness h(1);
    CHECK_THROWS_AS(run_extraction(*h.project, {}, h.catalog, h.prompt_ids(), *h.gateway, 1),
                    Error);
    CHECK_THROWS_AS(run_extraction(*h.project, h.papers, h.catalog, {}, *h.gateway, 1), Error);

    std::vector<PaperRecord> textless = {[] {
        PaperRecord r = make_paper(1, "");
        return r;
    }()};
    try {
        run_extraction(*h.project, textless, h.catalog, h.prompt_ids(), *h.gateway, 1);
        FAIL("expected MissingPaperText");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingPaperText);
    }
}

TEST_CASE("a failing send is logged as a failed step and stays resumable") {
    // rules without a fallback: the first prompt for paper 2 finds no match
    const char* rules = R"([
        {"contains": "Body of paper 1", "response": "fine"},
        {"contains": "Body of paper 3", "response": "fine"},
        {"contains": "obtained above", "response": "fine"},
        {"contains": "security terms", "response": "fine"},
        {"contains": "How was the relevance score", "response": "fine"},
        {"contains": "unikernels discussed in the provided paper", "response": "fine"}
    ])";
    RunHarness h(3, rules);
    try {
        run_extraction(*h.project, h.papers, h.catalog, {"P-1", "P-2"}, *h.gateway, 1);
        FAIL("expected NoMockRule");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoMockRule);
    }

    bool failed_logged = false;
    for (const StepRecord& r : h.project->fold_runlog()) {
        if (r.step_id == "extract:P-1:paper-02") {
            CHECK(r.status == StepStatus::Failed);
            failed_logged = true;
        }
    }
    CHECK(failed_logged);
    // the failed step is re-planned
    bool planned = false;
    for (const StepRecord& r : h.project->plan_resume()) {
        planned |= r.step_id == "extract:P-1:paper-02";
    }
    CHECK(planned);
}

TEST_CASE("aggregate sorts blocks, counts words and fails on gaps") {
    RunHarness h(3);
    run_extraction(*h.project, h.papers, h.catalog, h.prompt_ids(), *h.gateway, 1);

    AggregateDocument doc = aggregate(*h.project, h.papers, "P-1");
    REQUIRE(doc.blocks.size() == 3);
    CHECK(doc.blocks[0].paper_id == "paper-01");
    CHECK(doc.blocks[2].paper_id == "paper-03");

    // independent tokenizer oracle for the word-count rule
    auto stream_count = [](const std::string& text) {
        std::istringstream in(text);
        std::size_t n = 0;
        std::string token;
        while (in >> token) ++n;
        return n;
    };
    std::size_t expected_total = 0;
    for (const AggregateBlock& b : doc.blocks) {
        CHECK(b.word_count == stream_count(b.text));
        expected_total += b.word_count;
    }
    CHECK(doc.total_word_count == expected_total);

    std::string rendered = render_aggregate(doc);
    CHECK(rendered.find("### Response 1 — paper-01") == 0);
    CHECK(rendered.find("### Response 3 — paper-03") != std::string::npos);
    // headers excluded from the word count: rendered text has more words
    CHECK(word_count(rendered) > doc.total_word_count);

    PaperRecord extra = make_paper(4, "never extracted");
    std::vector<PaperRecord> with_gap = h.papers;
    with_gap.push_back(extra);
    try {
        aggregate(*h.project, with_gap, "P-1");
        FAIL("expected IncompleteRun");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IncompleteRun);
    }
}

TEST_CASE("word-count additivity: responses of 10, 20, 30 words total 60") {
    AggregateDocument doc;
    doc.prompt_id = "P-1";
    auto words = [](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += "w ";
        return s;
    };
    for (int i = 1; i <= 3; ++i) {
        AggregateBlock b;
        b.paper_id = make_paper_id(i);
        b.text = words(10 * i);
        b.word_count = word_count(b.text);
        doc.blocks.push_back(b);
        doc.total_word_count += b.word_count;
    }
    CHECK(doc.total_word_count == 60);
}

TEST_CASE("flag_off_topic flags low means and lists unscored papers") {
    const char* rules = R"([
        {"contains": "for each of the security terms", "response": "unscorable prose"},
        {"contains": "Body of paper 1", "response": "ASLR: 0.05\nDEP: 0.10"},
        {"contains": "Body of paper 2", "response": "ASLR: 0.90\nDEP: 1.00"},
        {"contains": "", "response": "no scores here"}
    ])";
    RunHarness h(3, rules);
    // P-1 only: the first message contains the paper body, so rules pick per paper
    run_extraction(*h.project, h.papers, h.catalog, {"P-1"}, *h.gateway, 1);

    OffTopicReport report =
        flag_off_topic(*h.project, h.papers, {"P-1"}, {"ASLR", "DEP"}, 0.20);
    REQUIRE(report.flagged.size() == 1);
    CHECK(report.flagged[0].first == "paper-01");
    CHECK(report.flagged[0].second == doctest::Approx(0.075));
    REQUIRE(report.unscored.size() == 1);
    CHECK(report.unscored[0] == "paper-03");
}

TEST_CASE("scores_csv emits sorted two-decimal rows") {
    RunHarness h(2);
    run_extraction(*h.project, h.papers, h.catalog, {"P-3", "P-4"}, *h.gateway, 1);
    std::string csv = scores_csv(*h.project, h.papers, {"P-3", "P-4"},
                                 {"ASLR", "DEP", "Stack Canaries"});
    auto lines = split_lines(csv);
    REQUIRE(lines.size() == 1 + 2 * 2 * 3);
    CHECK(lines[0] == "paper_id,prompt_id,term,value,confidence");
    CHECK(lines[1].substr(0, 18) == "paper-01,P-3,ASLR,");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        // value column is always \d.\d\d
        auto cols = lines[i];
        std::size_t comma = cols.rfind(',');
        std::string value = cols.substr(0, comma);
        value = value.substr(value.rfind(',') + 1);
        REQUIRE(value.size() == 4);
        CHECK(value[1] == '.');
    }
}
