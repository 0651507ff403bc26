#include "ceker/analysis.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace ceker;

TEST_CASE("parse_outline reads themed lists with bold majors") {
    std::string reply =
        "Conclusions:\n\n"
        "### Themes\n\n"
        "1. **Reduced Attack Surface**: minimal code keeps exposure small.\n"
        "2. **Isolation**: strong guest boundaries.\n"
        "3. **Immutable infrastructure**: rebuild instead of patch.\n"
        "4. Performance-security balance: speed against protection.\n"
        "5. Customization and Adaptability: built per workload.\n"
        "6. Advanced Security Features: hardware-backed extras.\n\n"
        "### Gaps\n\n"
        "1. **Missing Traditional OS Features**: familiar protections absent.\n"
        "2. Difficulty Debugging: few tools inside images.\n"
        "3. Dependency on Hypervisors: host carries isolation.\n";

    Outline outline = parse_outline(reply);
    REQUIRE(outline.themes.size() == 6);
    REQUIRE(outline.gaps.size() == 3);

    std::vector<std::string> major;
    for (const ThemeEntry& t : outline.themes) {
        if (t.major) major.push_back(t.name);
    }
    CHECK(major == std::vector<std::string>{"Reduced Attack Surface", "Isolation",
                                            "Immutable infrastructure"});
    CHECK(outline.themes[3].name == "Performance-security balance");
    CHECK_FALSE(outline.themes[3].major);
    CHECK(outline.themes[0].support == "minimal code keeps exposure small.");

    CHECK(outline.gaps[0].name == "Missing Traditional OS Features");
    CHECK(outline.gaps[1].name == "Difficulty Debugging");
    CHECK(outline.gaps[2].name == "Dependency on Hypervisors");
}

TEST_CASE("parse_outline handles bullets, label headings and empty replies") {
    std::string reply =
        "**Key Themes:**\n"
        "- Alpha: first\n"
        "* Beta - second\n"
        "Identified gaps:\n"
        "- Gamma\n";
    Outline outline = parse_outline(reply);
    REQUIRE(outline.themes.size() == 2);
    CHECK(outline.themes[0].name == "Alpha");
    CHECK(outline.themes[1].name == "Beta");
    CHECK(outline.themes[1].support == "second");
    REQUIRE(outline.gaps.size() == 1);
    CHECK(outline.gaps[0].name == "Gamma");
    CHECK(outline.gaps[0].support.empty());

    Outline empty = parse_outline("Just prose, no lists at all.");
    CHECK(empty.themes.empty());
    CHECK(empty.gaps.empty());
    Outline blank = parse_outline("");
    CHECK(blank.themes.empty());
    CHECK(blank.gaps.empty());
}

TEST_CASE("parse_outline ignores lists outside theme/gap headings") {
    std::string reply =
        "### Methods\n"
        "1. Alpha\n"
        "### Themes\n"
        "1. Real Theme\n";
    Outline outline = parse_outline(reply);
    REQUIRE(outline.themes.size() == 1);
    CHECK(outline.themes[0].name == "Real Theme");
}

TEST_CASE("parse_outline never invents entries") {
    std::vector<std::string> replies = {
        "### Themes\n1. **Bold One**: support\n2. Plain Two - more\n",
        "themes:\n- A colon: here\n",
        "### Gaps\n3. Something (parenthesized): x\n",
    };
    for (const std::string& reply : replies) {
        Outline outline = parse_outline(reply);
        for (const ThemeEntry& t : outline.themes) {
            CHECK(reply.find(t.name) != std::string::npos);
        }
        for (const GapEntry& g : outline.gaps) {
            CHECK(reply.find(g.name) != std::string::npos);
        }
    }
}

TEST_CASE("tally counts case-insensitively with synonyms") {
    std::vector<VocabEntry> vocab = {{"ASLR", {}}};
    FrequencyTable t = tally({"aslr ASLR aSLR"}, vocab);
    CHECK(t.entries["ASLR"] == 3);

    std::vector<VocabEntry> canaries = {{"stack canaries", {"stack canary"}}};
    FrequencyTable t2 = tally({"stack canary and stack canaries"}, canaries);
    CHECK(t2.entries["stack canaries"] == 2);
}

TEST_CASE("tally needs a vocabulary") {
    try {
        tally({"text"}, {});
        FAIL("expected EmptyVocabulary");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyVocabulary);
    }
}

TEST_CASE("tally equals the sliding-window oracle on 200 random fixtures") {
    std::mt19937 rng(13);
    const char* atoms[] = {"a", "ab", "b", "ba", "aa", " ", ".", "x"};
    auto random_text = [&]() {
        std::string s;
        int n = rng() % 60;
        for (int i = 0; i < n; ++i) s += atoms[rng() % std::size(atoms)];
        return s;
    };
    auto random_phrase = [&]() {
        std::string s;
        int n = 1 + rng() % 3;
        for (int i = 0; i < n; ++i) s += atoms[rng() % 5];
        return s;
    };

    for (int round = 0; round < 200; ++round) {
        std::vector<std::string> texts;
        int tcount = 1 + rng() % 3;
        for (int i = 0; i < tcount; ++i) texts.push_back(random_text());

        std::vector<VocabEntry> vocab;
        int vcount = 1 + rng() % 4;
        for (int i = 0; i < vcount; ++i) {
            VocabEntry e;
            e.term = random_phrase();
            bool duplicate = false;
            for (const VocabEntry& seen : vocab) duplicate |= seen.term == e.term;
            if (duplicate) continue;  // tally keys by term; keep entries distinct
            if (rng() % 2) e.synonyms.push_back(random_phrase());
            vocab.push_back(e);
        }
        if (vocab.empty()) vocab.push_back({"ab", {}});

        FrequencyTable got = tally(texts, vocab);
        for (const VocabEntry& e : vocab) {
            std::int64_t expected = 0;
            for (const std::string& text : texts) {
                expected += oracles::phrase_count_reference(text, e.term);
                for (const std::string& syn : e.synonyms) {
                    expected += oracles::phrase_count_reference(text, syn);
                }
            }
            CAPTURE(e.term);
            CHECK(got.entries[e.term] == expected);
        }

        // permutation invariance
        std::vector<VocabEntry> shuffled = vocab;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        FrequencyTable again = tally(texts, shuffled);
        CHECK(again.entries == got.entries);
    }
}

TEST_CASE("tally is exactly additive over boundary-free concatenation") {
    std::vector<VocabEntry> vocab = {{"aslr", {}}, {"dep", {}}};
    std::string a = "aslr here dep there";
    std::string b = "dep again";
    FrequencyTable whole = tally({a + "\n" + b}, vocab);
    FrequencyTable part_a = tally({a}, vocab);
    FrequencyTable part_b = tally({b}, vocab);
    for (const auto& [term, count] : whole.entries) {
        CHECK(count == part_a.entries[term] + part_b.entries[term]);
    }
}

TEST_CASE("compare_baseline unions terms and finds overlap") {
    FrequencyTable ceker;
    ceker.entries = {{"ASLR", 5}, {"DEP", 0}, {"isolation", 7}};
    FrequencyTable baseline;
    baseline.entries = {{"ASLR", 2}, {"seccomp", 4}};

    BaselineComparison cmp = compare_baseline(ceker, baseline);
    REQUIRE(cmp.rows.size() == 4);
    for (const auto& row : cmp.rows) {
        CHECK(row.delta == row.ceker_count - row.baseline_count);
    }
    CHECK(cmp.overlap_terms == std::vector<std::string>{"ASLR"});

    SUBCASE("empty baseline: deltas equal ceker counts, empty overlap") {
        BaselineComparison empty = compare_baseline(ceker, FrequencyTable{});
        for (const auto& row : empty.rows) {
            CHECK(row.delta == row.ceker_count);
            CHECK(row.baseline_count == 0);
        }
        CHECK(empty.overlap_terms.empty());
    }

    SUBCASE("disjoint nonzero term sets have empty overlap") {
        FrequencyTable other;
        other.entries = {{"seccomp", 1}, {"SELinux", 2}};
        FrequencyTable mine;
        mine.entries = {{"ASLR", 3}};
        CHECK(compare_baseline(mine, other).overlap_terms.empty());
    }

    SUBCASE("identical tables: zero deltas, overlap is all nonzero terms") {
        BaselineComparison same = compare_baseline(ceker, ceker);
        for (const auto& row : same.rows) CHECK(row.delta == 0);
        CHECK(same.overlap_terms == std::vector<std::string>{"ASLR", "isolation"});
    }

    SUBCASE("deltas are antisymmetric under argument swap") {
        BaselineComparison forward = compare_baseline(ceker, baseline);
        BaselineComparison backward = compare_baseline(baseline, ceker);
        REQUIRE(forward.rows.size() == backward.rows.size());
        for (std::size_t i = 0; i < forward.rows.size(); ++i) {
            CHECK(forward.rows[i].term == backward.rows[i].term);
            CHECK(forward.rows[i].delta == -backward.rows[i].delta);
        }
    }
}

TEST_CASE("baseline CSV parsing") {
    FrequencyTable t = load_baseline_csv("term,count\nASLR,5\n\"a, b\",2\n");
    CHECK(t.entries["ASLR"] == 5);
    CHECK(t.entries["a, b"] == 2);
    CHECK_THROWS_AS(load_baseline_csv("wrong,header\n"), Error);
}

TEST_CASE("vocabulary JSON parsing") {
    auto vocab = load_vocabulary(R"([{"term": "ASLR", "synonyms": ["address space layout randomization"]},
                                     {"term": "DEP"}])");
    REQUIRE(vocab.size() == 2);
    CHECK(vocab[0].term == "ASLR");
    REQUIRE(vocab[0].synonyms.size() == 1);
    CHECK(vocab[1].synonyms.empty());
    CHECK_THROWS_AS(load_vocabulary("{not: array}"), Error);
}

TEST_CASE("run_analysis without aggregates raises MissingAggregate") {
    fs::path dir = oracles::make_temp_dir("ceker-analysis");
    fs::path rules = dir / "rules.json";
    {
        std::ofstream out(rules);
        out << R"([{"contains": "", "response": "ok"}])";
    }
    std::string toml = CekerConfig::default_toml("t");
    toml += "\n[gateway]\nmock_rules = \"" + rules.string() + "\"\n";
    Project project = Project::init(dir / "proj", toml);
    Gateway gateway(BackendConfig::from_config(project.config()));

    PromptCatalog catalog = PromptCatalog::builtin();
    AnalysisPlan plan = default_plan({"P-1"}, catalog);
    try {
        run_analysis(project, plan, catalog, gateway, 1);
        FAIL("expected MissingAggregate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingAggregate);
    }
    fs::remove_all(dir);
}

TEST_CASE("extract_list_items strips emphasis and keeps order") {
    auto items = extract_list_items("intro\n1. **First**\n2. Second\n- Third\nprose\n");
    REQUIRE(items.size() == 3);
    CHECK(items[0] == "First");
    CHECK(items[1] == "Second");
    CHECK(items[2] == "Third");
}
