// ceker: three-step literature analysis pipeline (collect, extract, analyze)
// with live, replay and mock LLM backends.

#include "ceker/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <string>

namespace {

using namespace ceker;
using nlohmann::json;

struct GlobalFlags {
    std::string project_dir = ".";
    bool offline = false;
    std::string transcripts;
    std::string backend;
    std::string model;
    std::string endpoint;
    long long seed = 0;
    bool seed_set = false;
    long long parallelism = 0;
    bool parallelism_set = false;
    std::string prompts;
    std::string baseline;
    bool partial = false;
    std::string mock_rules;
    std::string capture_requests;
};

void apply_overrides(Project& project, const GlobalFlags& flags) {
    CekerConfig& config = project.config();
    // Paths given as flags resolve against the caller's directory; paths from
    // ceker.toml stay project-relative.
    auto from_cwd = [](const std::string& path) {
        return fs::absolute(path).string();
    };
    if (!flags.backend.empty()) config.backend = flags.backend;
    if (flags.offline) config.backend = "replay";
    if (!flags.transcripts.empty()) config.transcripts_dir = from_cwd(flags.transcripts);
    if (!flags.model.empty()) config.model = flags.model;
    if (!flags.endpoint.empty()) config.endpoint = flags.endpoint;
    if (flags.seed_set) config.seed = flags.seed;
    if (flags.parallelism_set) config.parallelism = flags.parallelism;
    if (!flags.prompts.empty()) config.prompts_file = from_cwd(flags.prompts);
    if (!flags.baseline.empty()) config.baseline_csv = from_cwd(flags.baseline);
    if (!flags.mock_rules.empty()) config.mock_rules = from_cwd(flags.mock_rules);
    if (!flags.capture_requests.empty()) {
        config.capture_requests = from_cwd(flags.capture_requests);
    }
}

Project open_project(const GlobalFlags& flags) {
    Project project = Project::open(flags.project_dir);
    apply_overrides(project, flags);
    return project;
}

ReportOptions report_options(const GlobalFlags& flags) {
    ReportOptions options;
    options.partial = flags.partial;
    if (!flags.baseline.empty()) {
        options.baseline_csv_path = fs::absolute(flags.baseline).string();
    }
    return options;
}

int cmd_init(const GlobalFlags& flags, const std::string& topic) {
    Project project = Project::init(flags.project_dir, CekerConfig::default_toml(topic));
    std::cout << "initialized project at " << project.root().string() << "\n";
    return 0;
}

int cmd_corpus_add(const GlobalFlags& flags, const std::string& manifest,
                   const std::string& title, const std::string& file) {
    Project project = open_project(flags);
    CorpusStore store(project);

    std::vector<std::pair<std::string, fs::path>> entries;
    if (!manifest.empty()) {
        fs::path base = fs::path(manifest).parent_path();
        json list = json::parse(read_file(manifest));
        for (const json& j : list) {
            fs::path path = j.at("file").get<std::string>();
            if (!path.is_absolute()) path = base / path;
            entries.emplace_back(j.at("title").get<std::string>(), path);
        }
    } else if (!title.empty() && !file.empty()) {
        entries.emplace_back(title, file);
    } else {
        raise(ErrorCode::UsageError, "corpus add needs --manifest or --title with --file");
    }

    std::vector<PaperRecord> existing = store.load();
    std::vector<std::string> titles;
    for (const PaperRecord& r : existing) titles.push_back(normalize_title(r.title));

    IngestResult result = ingest_reused(entries, static_cast<int>(existing.size()));
    // drop entries duplicating what is already stored
    std::vector<PaperRecord> fresh;
    for (PaperRecord& r : result.records) {
        if (std::find(titles.begin(), titles.end(), normalize_title(r.title)) != titles.end()) {
            result.warnings.push_back({"DuplicateCollapsed",
                                       "already in the corpus: " + r.title});
            continue;
        }
        fresh.push_back(std::move(r));
    }
    // reassign ordinals after dropping duplicates
    int ordinal = static_cast<int>(existing.size());
    for (PaperRecord& r : fresh) r.paper_id = make_paper_id(++ordinal);

    store.append_records(fresh);
    for (const Warning& w : result.warnings) {
        std::cerr << "warning " << w.code << ": " << w.message << "\n";
    }
    std::cout << "added " << fresh.size() << " papers (corpus now "
              << existing.size() + fresh.size() << ")\n";
    return 0;
}

int cmd_corpus_attach(const GlobalFlags& flags, const std::string& paper_id,
                      const std::string& file) {
    Project project = open_project(flags);
    CorpusStore store(project);
    store.attach_text(paper_id, read_file(file));
    std::cout << "attached text to " << paper_id << "\n";
    return 0;
}

int cmd_corpus_propose(const GlobalFlags& flags, int count) {
    Project project = open_project(flags);
    CorpusStore store(project);

    auto states = store.load_candidates();
    int batch = 1;
    for (const auto& s : states) batch = std::max(batch, s.batch + 1);

    Gateway gateway = make_gateway(project);
    ProposalResult result = propose_candidates(project.config().topic, count, gateway, batch);

    ArtifactId raw = project.put_artifact("proposal", result.raw_response);
    char step[48];
    std::snprintf(step, sizeof(step), "propose:batch-%02d", batch);
    project.log_done(step, {}, {raw});

    for (const CandidateCitation& c : result.candidates) {
        CorpusStore::CandidateState state;
        state.candidate = c;
        state.batch = batch;
        states.push_back(std::move(state));
    }
    store.save_candidates(states);

    for (const Warning& w : result.warnings) {
        std::cerr << "warning " << w.code << ": " << w.message << "\n";
    }
    std::cout << "proposed " << result.candidates.size() << " candidates (batch " << batch
              << "); run `ceker corpus verify`\n";
    return 0;
}

int cmd_corpus_verify(const GlobalFlags& flags) {
    Project project = open_project(flags);
    PipelineSetup setup = load_pipeline_setup(project);
    phase_verify(project, setup);

    CorpusStore store(project);
    int verified = 0;
    int not_found = 0;
    int other = 0;
    for (const auto& s : store.load_candidates()) {
        if (!s.result || s.consumed) continue;
        switch (s.result->status) {
            case VerificationStatus::Verified: ++verified; break;
            case VerificationStatus::NotFound: ++not_found; break;
            default: ++other; break;
        }
    }
    std::cout << "verification: " << verified << " verified, " << not_found << " not found, "
              << other << " need review\n";
    return 0;
}

int cmd_corpus_vet(const GlobalFlags& flags) {
    Project project = open_project(flags);
    CorpusStore store(project);

    auto states = store.load_candidates();
    std::vector<VetDecision> decisions = store.load_decisions();

    auto has_decision = [&decisions](const std::string& title) {
        for (const VetDecision& d : decisions) {
            if (d.candidate_title == title) return true;
        }
        return false;
    };

    std::vector<std::size_t> to_process;
    int skipped = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        if (s.consumed || !s.result) continue;
        bool needs_human =
            s.result->status != VerificationStatus::Verified && !has_decision(s.candidate.raw_title);
        if (needs_human) {
            std::cout << s.candidate.raw_title << "\n";
            std::cout << "  status: " << verification_status_name(s.result->status);
            if (s.result->best_match) {
                char sim[16];
                std::snprintf(sim, sizeof(sim), "%.2f", s.result->best_match->similarity);
                std::cout << "; best match: \"" << s.result->best_match->matched_title << "\" ("
                          << s.result->best_match->source << ", similarity " << sim << ")";
            }
            std::cout << "\n  accept/reject/skip [a/r/s]? " << std::flush;
            std::string answer;
            if (!std::getline(std::cin, answer)) answer = "s";
            answer = trim(answer);
            if (answer == "a" || answer == "r") {
                VetDecision d;
                d.candidate_title = s.candidate.raw_title;
                d.decision = answer == "a" ? "accept" : "reject";
                d.decided_at = now_iso8601_utc();
                store.append_decision(d);
                decisions.push_back(std::move(d));
            } else {
                ++skipped;
                continue;
            }
        }
        to_process.push_back(i);
    }

    std::vector<CandidateCitation> candidates;
    std::vector<VerificationResult> results;
    for (std::size_t i : to_process) {
        candidates.push_back(states[i].candidate);
        results.push_back(*states[i].result);
    }

    std::vector<PaperRecord> existing = store.load();
    std::vector<std::string> titles;
    for (const PaperRecord& r : existing) {
        if (r.included) titles.push_back(normalize_title(r.title));
    }

    VetOutcome outcome =
        vet(candidates, results, decisions, titles, static_cast<int>(existing.size()));
    store.append_records(outcome.additions);
    for (std::size_t i : to_process) states[i].consumed = true;
    store.save_candidates(states);

    for (const auto& [candidate, reason] : outcome.exclusions) {
        std::cout << "excluded (" << reason << "): " << candidate.raw_title << "\n";
    }
    std::cout << "vet: " << outcome.additions.size() << " added, " << outcome.exclusions.size()
              << " excluded, " << skipped << " skipped\n";
    if (!outcome.additions.empty()) {
        std::cout << "attach full texts with `ceker corpus attach --paper <id> --file <txt>`\n";
    }
    return 0;
}

int cmd_extract(const GlobalFlags& flags) {
    Project project = open_project(flags);
    PipelineSetup setup = load_pipeline_setup(project);
    Gateway gateway = make_gateway(project);
    phase_extract(project, setup, gateway);
    std::cout << "extraction complete\n";
    return 0;
}

int cmd_analyze(const GlobalFlags& flags) {
    Project project = open_project(flags);
    PipelineSetup setup = load_pipeline_setup(project);
    Gateway gateway = make_gateway(project);
    phase_analyze(project, setup, gateway);
    std::cout << "analysis complete\n";
    return 0;
}

int cmd_report(const GlobalFlags& flags) {
    Project project = open_project(flags);
    PipelineSetup setup = load_pipeline_setup(project);
    phase_report(project, setup, report_options(flags));
    std::cout << "report written to " << (project.report_dir() / "report.md").string() << "\n";
    return 0;
}

int cmd_run(const GlobalFlags& flags) {
    Project project = open_project(flags);
    run_all(project, report_options(flags));
    std::cout << "run complete; report at " << (project.report_dir() / "report.md").string()
              << "\n";
    return 0;
}

int cmd_resume(const GlobalFlags& flags) {
    Project project = open_project(flags);
    if (!resume(project, report_options(flags))) {
        std::cout << "nothing to do\n";
        return 0;
    }
    std::cout << "resume complete\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ceker: LLM-assisted literature analysis pipeline"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--project", flags.project_dir, "Project directory (default: .)");
    app.add_flag("--offline", flags.offline, "Force the replay backend");
    app.add_option("--transcripts", flags.transcripts, "Transcript directory");
    app.add_option("--backend", flags.backend, "Backend: live|replay|mock")
        ->check(CLI::IsMember({"live", "replay", "mock"}));
    app.add_option("--model", flags.model, "Model name");
    app.add_option("--endpoint", flags.endpoint, "Live endpoint base URL");
    auto* seed_opt = app.add_option("--seed", flags.seed, "Decoding seed");
    auto* par_opt = app.add_option("--parallelism", flags.parallelism, "Concurrent workers");
    app.add_option("--prompts", flags.prompts, "User prompt-set JSON file");
    app.add_option("--baseline", flags.baseline, "Baseline CSV (term,count)");
    app.add_flag("--partial", flags.partial, "Report on incomplete analysis");
    app.add_option("--mock-rules", flags.mock_rules, "Mock backend rule file");
    app.add_option("--capture-requests", flags.capture_requests,
                   "Append outgoing requests to this JSONL file");

    auto* init = app.add_subcommand("init", "Create a project");
    std::string topic;
    init->add_option("--topic", topic, "Research topic")->required();

    auto* corpus = app.add_subcommand("corpus", "Corpus management");
    corpus->require_subcommand(1);
    auto* add = corpus->add_subcommand("add", "Ingest existing papers");
    std::string manifest;
    std::string title;
    std::string file;
    add->add_option("--manifest", manifest, "JSON list [{title, file}]");
    add->add_option("--title", title, "Single paper title");
    add->add_option("--file", file, "Single paper text file");
    auto* attach = corpus->add_subcommand("attach", "Attach text to a paper");
    std::string paper_id;
    std::string attach_file;
    attach->add_option("--paper", paper_id, "Paper id, e.g. paper-07")->required();
    attach->add_option("--file", attach_file, "UTF-8 text file")->required();
    auto* propose = corpus->add_subcommand("propose", "Ask the LLM for candidate papers");
    int count = 25;
    propose->add_option("--count", count, "Candidates to request (default 25)");
    auto* verify = corpus->add_subcommand("verify", "Resolve candidates against sources");
    auto* vet_cmd = corpus->add_subcommand("vet", "Interactive accept/reject pass");

    auto* extract = app.add_subcommand("extract", "Step 2: extract key features");
    auto* analyze = app.add_subcommand("analyze", "Step 3: analyze aggregates");
    auto* report = app.add_subcommand("report", "Assemble the report bundle");
    auto* run = app.add_subcommand("run", "corpus verify, extract, analyze, report");
    auto* resume_cmd = app.add_subcommand("resume", "Finish pending steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR UsageError: " << e.what() << "\n";
        return 2;
    }
    flags.seed_set = seed_opt->count() > 0;
    flags.parallelism_set = par_opt->count() > 0;

    try {
        if (init->parsed()) return cmd_init(flags, topic);
        if (add->parsed()) return cmd_corpus_add(flags, manifest, title, file);
        if (attach->parsed()) return cmd_corpus_attach(flags, paper_id, attach_file);
        if (propose->parsed()) return cmd_corpus_propose(flags, count);
        if (verify->parsed()) return cmd_corpus_verify(flags);
        if (vet_cmd->parsed()) return cmd_corpus_vet(flags);
        if (extract->parsed()) return cmd_extract(flags);
        if (analyze->parsed()) return cmd_analyze(flags);
        if (report->parsed()) return cmd_report(flags);
        if (run->parsed()) return cmd_run(flags);
        if (resume_cmd->parsed()) return cmd_resume(flags);
        std::cerr << "ERROR UsageError: no command\n";
        return 2;
    } catch (const ceker::Error& e) {
        if (e.code() == ErrorCode::UsageError) {
            std::cerr << "ERROR UsageError: " << e.what() << "\n";
            return 2;
        }
        std::cerr << "ERROR " << e.code_name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR Internal: " << e.what() << "\n";
        return 1;
    }
}
