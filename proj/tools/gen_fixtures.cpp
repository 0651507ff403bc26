// Regenerates the bundled fixture set: a 33-paper synthetic corpus, the
// literature-search candidate list with its fixture resolver database, mock
// backend rules, vocabularies, a baseline table and the replay transcripts
// recorded from a full mock-backend pipeline run.
//
// Usage: ceker_gen_fixtures <fixtures-dir>

#include "ceker/pipeline.hpp"
#include "fixture_common.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <random>

using namespace ceker;
using nlohmann::json;

namespace {

struct SearchTitle {
    const char* title;
    bool exists;
};

// The literature-search fixture: 25 proposed titles, 9 of which resolve
// nowhere. The resolver database carries exactly the 16 real ones.
const SearchTitle kSearchTitles[] = {
    {"A Security Perspective on Unikernels", true},
    {"A Survey of Unikernel Security: Insights and Trends from a Quantitative Analysis", true},
    {"Unikernels Motivations, Benefits and Issues: A Multivocal Literature Review", true},
    {"Enhancing Cloud Security and Privacy: The Unikernel Solution", true},
    {"Unikernel-based Approach for Software-Defined Security in Cloud Infrastructures", true},
    {"Unikernel Linux (UKL)", true},
    {"Are Unikernels Ready for Serverless on the Edge?", true},
    {"Isolating Real-Time Safety-Critical Embedded Systems via SGX-based Lightweight "
     "Virtualization", true},
    {"The Endokernel: Fast, Secure, and Programmable Subprocess Virtualization", true},
    {"Unikernels: Library Operating Systems for the Cloud", true},
    {"IncludeOS: A Minimal, Resource Efficient Unikernel for Cloud Services", true},
    {"HermitCore: A Unikernel for Extreme Scale Computing", true},
    {"ClickOS and the Art of Network Function Virtualization", true},
    {"OSv—Optimizing the Operating System for Virtual Machines", true},
    {"Rumprun: Efficient and Secure Application Execution with Unikernels", false},
    {"Unikraft: Fast, Specialized Unikernels the Easy Way", true},
    {"Graphene-SGX: A Practical Library OS for Unmodified Applications on SGX", true},
    {"Security Isolation of Unikernels on Xen Hypervisor", false},
    {"Unikernelization of Containerized Applications to Reduce Attack Surfaces", false},
    {"Tackling Cloud Security with Unikernels: Architectural Paradigm for Trustworthy Cloud "
     "Workloads", false},
    {"Sledge: A Secure, Efficient Edge Computing System Built on Unikernels", false},
    {"Reducing Security Complexity in IoT Devices Using Unikernels", false},
    {"Microsecond-Scale Isolation for Unikernels", false},
    {"Securing Smart Contracts Using Unikernel Technology", false},
    {"Unikernel Security: Design and Mitigation of Attack Vectors in Minimal OS Environments",
     false},
};

const char* kUnikernels[] = {"Unikraft",   "MirageOS", "OSv",     "IncludeOS", "HermitCore",
                             "HermiTux",   "ClickOS",  "Rumprun", "Nanos",     "LightVM"};

const char* kFeatures[] = {"reduced attack surface", "memory isolation",
                           "ASLR",                   "DEP",
                           "stack canaries",         "entropy generation",
                           "privilege separation",   "immutable infrastructure",
                           "memory protection keys", "SGX"};

std::string paper_title(int i) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "Field Notes %02d: Hardening %s Workloads", i,
                  kUnikernels[(i - 1) % 10]);
    return buf;
}

std::string paper_text(int i) {
    const char* uk_a = kUnikernels[(i - 1) % 10];
    const char* uk_b = kUnikernels[(i * 3 + 1) % 10];
    const char* feat_a = kFeatures[(i - 1) % 10];
    const char* feat_b = kFeatures[(i * 7 + 2) % 10];
    const char* feat_c = kFeatures[(i * 5 + 4) % 10];

    std::string text;
    char mark[64];
    std::snprintf(mark, sizeof(mark), "PAPERMARK-paper-%02d", i);
    text += std::string(mark) + "\n\n";
    text += "This study examines how " + std::string(uk_a) +
            " images behave once the build strips every service the workload never calls. ";
    text += "The measurements cover boot latency, image size, and the handling of " +
            std::string(feat_a) + " across rebuilds.\n\n";
    text += "Compared with " + std::string(uk_b) +
            ", the evaluated configuration keeps a single address space and drops " +
            std::string(feat_b) + " entirely. ";
    text += "We argue that " + std::string(feat_a) +
            " remains the decisive property for minimal images, while " + std::string(feat_c) +
            " is routinely deferred to the host.\n\n";
    for (int k = 0; k < (i % 3) + 1; ++k) {
        text += "Repeated builds confirm that " + std::string(uk_a) + " retains " +
                std::string(feat_a) + " under load.\n";
    }
    text += "\nOperators who need " + std::string(feat_b) +
            " today must patch the toolchain or accept the gap until upstream support lands.\n";
    return text;
}

json mock_rules() {
    auto rule = [](const char* contains, std::string response) {
        return json{{"contains", contains}, {"response", std::move(response)}};
    };

    std::string collect_list = "Here are 25 highly cited research articles on unikernel "
                               "security:\n\n";
    for (std::size_t i = 0; i < std::size(kSearchTitles); ++i) {
        collect_list += std::to_string(i + 1) + ". " + kSearchTitles[i].title + "\n";
    }

    json rules = json::array();
    rules.push_back(rule("Find 25 highly cited research articles", collect_list));

    // Specific analysis prompts first: they quote extraction prompt bodies.
    rules.push_back(rule(
        "Organize the papers from the scores closest to 0.00",
        "Ordered from the lowest to the highest combined score [{{DIGEST8}}]:\n"
        "1. paper-12 (0.01)\n2. paper-05 (0.08)\n3. paper-21 (0.15)\n4. paper-02 (0.44)\n"
        "5. paper-17 (0.78)\n6. paper-09 (0.96)\n"));
    rules.push_back(rule(
        "Organize the papers from highest to lowest confidence",
        "Ordered from the highest to the lowest confidence [{{DIGEST8}}]:\n"
        "1. paper-03 (high)\n2. paper-11 (high)\n3. paper-24 (medium)\n4. paper-30 (medium)\n"
        "5. paper-16 (low)\n"));
    rules.push_back(rule(
        "Identify what is the most commonly discussed unikernel",
        "The most commonly discussed unikernel is Unikraft [{{DIGEST8}}]. Its responses pair it "
        "with memory isolation, a reduced attack surface, and immutable rebuild pipelines.\n"));
    rules.push_back(rule(
        "top five most commonly discussed",
        "Most commonly discussed unikernels [{{DIGEST8}}]:\n"
        "1. Unikraft\n2. MirageOS\n3. OSv\n4. IncludeOS\n5. HermitCore\n\n"
        "Most commonly discussed security features:\n"
        "1. reduced attack surface\n2. memory isolation\n3. ASLR\n4. DEP\n5. stack canaries\n"));
    rules.push_back(rule(
        "top three unikernels",
        "Top three unikernels by frequency [{{DIGEST8}}]:\n1. Unikraft\n2. MirageOS\n3. OSv\n"));
    rules.push_back(rule(
        "most common security feature discussed in the summaries",
        "The most common security feature is the reduced attack surface [{{DIGEST8}}]; the most "
        "frequently identified gap is missing traditional OS features.\n"));
    rules.push_back(rule(
        "What is the most common security feature, and what does the response say",
        "The most common security feature is the reduced attack surface [{{DIGEST8}}]. The "
        "responses tie it to minimal images and a single address space.\n"));
    rules.push_back(rule(
        "What is the least common security feature, and what does the response say",
        "The least common security feature is dynamic security adjustments [{{DIGEST8}}]. The "
        "responses mention it only as future work for regenerating images against live "
        "threats.\n"));
    rules.push_back(rule(
        "which paper has the highest score for ASLR",
        "Highest ASLR: paper-03. Highest DEP: paper-11. Highest Stack Canaries: paper-24. "
        "Lowest ASLR: paper-12. Lowest DEP: paper-05. Lowest Stack Canaries: paper-21. "
        "[{{DIGEST8}}]\n"));

    // General analysis prompts.
    rules.push_back(rule(
        "Summarize all the responses",
        "Summary [{{DIGEST8}}]:\n\n"
        "Recurring observations:\n"
        "1. Minimal images keep the exposed interface small.\n"
        "2. A single address space replaces costly context switches.\n"
        "3. Host-level virtualization carries much of the isolation burden.\n"
        "4. Standard mitigations are often dropped at build time.\n\n"
        "Recurring concerns:\n"
        "1. Missing debugging hooks complicate incident response.\n"
        "2. Entropy sources are scarce inside minimal guests.\n"
        "3. Rebuild-based patching assumes mature pipelines.\n"));
    rules.push_back(rule(
        "Using the above summaries",
        "Conclusions [{{DIGEST8}}]:\n\n"
        "### Themes\n\n"
        "1. **Reduced Attack Surface**: minimal code and a single address space keep the "
        "exposed surface small.\n"
        "2. **Isolation**: strong guest boundaries recur across the responses.\n"
        "3. **Immutable infrastructure**: rebuild-instead-of-patch deployment is a recurring "
        "operational theme.\n"
        "4. Performance-security balance: speed gains are weighed against missing protections.\n"
        "5. Customization and Adaptability: images are tailored per workload, including cloud "
        "and IoT targets.\n"
        "6. Advanced Security Features: hardware-assisted protections appear alongside missing "
        "stack defenses.\n\n"
        "### Gaps\n\n"
        "1. **Missing Traditional OS Features**: familiar protections are absent from minimal "
        "images.\n"
        "2. Difficulty Debugging: limited tooling hampers inspection.\n"
        "3. Dependency on Hypervisors: isolation leans on the host virtualization layer.\n"));

    // Extraction prompts, most specific first.
    rules.push_back(rule(
        "Also provide your confidence",
        "RESPMARK:P-4 [{{DIGEST8}}]\n"
        "ASLR: {{SCORE:6}} (high) — the response treats address randomization directly.\n"
        "DEP: {{SCORE:7}} (medium) — execution prevention appears via privilege "
        "separation.\n"
        "Stack Canaries: {{SCORE:8}} (low) — canaries are mentioned only in passing.\n"));
    rules.push_back(rule(
        "for each of the security terms",
        "RESPMARK:P-3 [{{DIGEST8}}]\n"
        "ASLR: {{SCORE:0}}\nDEP: {{SCORE:1}}\nStack Canaries: {{SCORE:2}}\n"));
    rules.push_back(rule(
        "security features obtained above",
        "RESPMARK:P-2 [{{DIGEST8}}]\n"
        "Scores for the features listed above:\n"
        "reduced attack surface: {{SCORE:3}}\n"
        "memory isolation: {{SCORE:4}}\n"
        "immutable infrastructure: {{SCORE:5}}\n"));
    rules.push_back(rule(
        "How was the relevance score calculated",
        "RESPMARK:P-5 [{{DIGEST8}}] The scores weigh direct mentions, contextual emphasis, and "
        "recurrence within the provided text, normalized to the 0.00-1.00 band.\n"));
    rules.push_back(rule(
        "What are the unikernels discussed in the provided paper",
        "RESPMARK:P-6 [{{DIGEST8}}] The paper centers on one primary unikernel and one "
        "comparison target. Unikraft-style builds pair memory isolation with a reduced attack "
        "surface; the comparison system defers entropy generation to the host.\n"));
    rules.push_back(rule(
        "What are the security features discussed in the provided paper",
        "RESPMARK:P-1 [{{DIGEST8}}]\n"
        "Security features discussed:\n"
        "- reduced attack surface: the build drops unused services.\n"
        "- memory isolation: the guest boundary carries the isolation story.\n"
        "- immutable infrastructure: images are rebuilt rather than patched.\n"));
    rules.push_back(rule("", "Acknowledged. [{{DIGEST8}}]\n"));
    return rules;
}

void write(const fs::path& path, const std::string& content) {
    ensure_dir(path.parent_path());
    write_file_atomic(path, content);
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: ceker_gen_fixtures <fixtures-dir>\n";
        return 2;
    }
    fs::path out = fs::absolute(argv[1]);
    ensure_dir(out);

    // 1. synthetic corpus
    json list = json::array();
    for (int i = 1; i <= 33; ++i) {
        std::string id = make_paper_id(i);
        write(out / "corpus" / (id + ".txt"), paper_text(i));
        list.push_back({{"title", paper_title(i)}, {"file", id + ".txt"}});
    }
    write(out / "corpus" / "list.json", list.dump(2) + "\n");

    // 2. literature-search fixtures
    json works = json::array();
    json candidates = json::array();
    int work_no = 0;
    for (std::size_t i = 0; i < std::size(kSearchTitles); ++i) {
        const SearchTitle& t = kSearchTitles[i];
        if (t.exists) {
            char id[16];
            std::snprintf(id, sizeof(id), "W%02d", ++work_no);
            works.push_back({{"id", id}, {"title", t.title}});
        }
        candidates.push_back({{"index", i + 1}, {"title", t.title}, {"exists", t.exists}});
    }
    write(out / "resolver_works.json", works.dump(2) + "\n");
    write(out / "candidates_table1.json", candidates.dump(2) + "\n");

    // 3. mock rules, vocabularies, baseline, reference shape numbers
    write(out / "mock_rules.json", mock_rules().dump(2) + "\n");

    json vocab_uk = json::array();
    for (const char* name : kUnikernels) {
        vocab_uk.push_back({{"term", name}, {"synonyms", json::array()}});
    }
    write(out / "vocab" / "unikernels.json", vocab_uk.dump(2) + "\n");

    json vocab_sec = json::array();
    vocab_sec.push_back({{"term", "reduced attack surface"},
                         {"synonyms", {"attack surface reduction"}}});
    vocab_sec.push_back({{"term", "memory isolation"}, {"synonyms", json::array()}});
    vocab_sec.push_back({{"term", "ASLR"}, {"synonyms", {"address space layout randomization"}}});
    vocab_sec.push_back({{"term", "DEP"}, {"synonyms", {"data execution prevention"}}});
    vocab_sec.push_back({{"term", "stack canaries"}, {"synonyms", {"stack canary"}}});
    vocab_sec.push_back({{"term", "entropy generation"}, {"synonyms", json::array()}});
    vocab_sec.push_back({{"term", "privilege separation"}, {"synonyms", json::array()}});
    vocab_sec.push_back({{"term", "immutable infrastructure"}, {"synonyms", {"immutability"}}});
    write(out / "vocab" / "security_features.json", vocab_sec.dump(2) + "\n");

    write(out / "baseline.csv",
          "term,count\nseccomp,5\nSELinux,3\nAppArmor,2\ncontrol-flow integrity,4\n");

    // Word counts reported for the original case-study documents; kept as
    // reference metadata, not reproducible from the synthetic corpus.
    json reference = {{"responses_total", 198},
                      {"papers", 33},
                      {"document_word_counts",
                       {{"P-1", 12204},
                        {"P-2", 10252},
                        {"P-3", 9297},
                        {"P-4", 10691},
                        {"P-5", 14873},
                        {"P-6", 16293}}}};
    write(out / "case_study_reference.json", reference.dump(2) + "\n");

    // 4. record transcripts from a full mock run in a scratch project
    fs::path scratch = out / ".scratch-project";
    fs::remove_all(scratch);
    fs::remove_all(out / "transcripts");
    ensure_dir(scratch);
    {
        Project project = Project::init(
            scratch, ceker_fixtures::fixture_config_toml(out.string(), "mock"));
        project.config().parallelism = 1;

        CorpusStore store(project);
        std::vector<std::pair<std::string, fs::path>> entries;
        for (int i = 1; i <= 33; ++i) {
            entries.emplace_back(paper_title(i),
                                 out / "corpus" / (make_paper_id(i) + ".txt"));
        }
        store.save(ingest_reused(entries).records);

        Gateway gateway = make_gateway(project);
        ProposalResult proposal =
            propose_candidates(project.config().topic, 25, gateway, 1);
        if (proposal.candidates.size() != 25) {
            std::cerr << "fixture bug: collect reply parsed to " << proposal.candidates.size()
                      << " candidates\n";
            return 1;
        }

        PipelineSetup setup = load_pipeline_setup(project);
        phase_extract(project, setup, gateway);
        phase_analyze(project, setup, gateway);
        phase_report(project, setup, {});
    }
    fs::remove_all(scratch);

    std::cout << "fixtures written to " << out.string() << "\n";
    return 0;
}
