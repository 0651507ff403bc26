#include "ceker/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace ceker {

using nlohmann::json;

namespace {

std::string verify_step_id(std::size_t candidate_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "verify:cand-%03zu", candidate_index + 1);
    return buf;
}

std::string aggregate_step_id(const std::string& prompt_id) {
    return "aggregate:" + prompt_id;
}

} // namespace

PipelineSetup load_pipeline_setup(Project& project) {
    PipelineSetup setup;
    setup.catalog = PromptCatalog::builtin();
    if (!project.config().prompts_file.empty()) {
        fs::path path = fs::path(project.config().prompts_file).is_absolute()
                            ? fs::path(project.config().prompts_file)
                            : project.root() / project.config().prompts_file;
        setup.catalog.merge_json(read_file(path));
    }
    for (const PromptTemplate& t : setup.catalog.by_phase(PromptPhase::Extract)) {
        setup.extract_prompt_ids.push_back(t.template_id);
    }
    setup.plan = default_plan(setup.extract_prompt_ids, setup.catalog);
    return setup;
}

void ensure_full_plan(Project& project, const PipelineSetup& setup) {
    CorpusStore store(project);

    auto candidates = store.load_candidates();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].result && !candidates[i].consumed) {
            project.log_pending(verify_step_id(i));
        }
    }

    std::vector<PaperRecord> papers = store.included();
    if (papers.empty()) return;  // nothing downstream to plan yet

    for (const PaperRecord& paper : papers) {
        for (const std::string& prompt_id : setup.extract_prompt_ids) {
            project.log_pending(extract_step_id(prompt_id, paper.paper_id));
        }
    }
    for (const std::string& prompt_id : setup.extract_prompt_ids) {
        project.log_pending(aggregate_step_id(prompt_id));
    }
    for (const AnalysisPlan::Entry& entry : setup.plan.entries) {
        for (const std::string& id : entry.general_ids) {
            project.log_pending(analysis_step_id(entry.source_prompt_id, id));
        }
        for (const std::string& id : entry.specific_ids) {
            project.log_pending(analysis_step_id(entry.source_prompt_id, id));
        }
    }
    project.log_pending("report:build");
}

std::vector<std::shared_ptr<Resolver>> build_resolvers(Project& project) {
    std::vector<std::shared_ptr<Resolver>> resolvers;
    for (const std::string& spec : project.config().resolvers) {
        if (starts_with(spec, "fixture:")) {
            fs::path path = spec.substr(8);
            if (!path.is_absolute()) path = project.root() / path;
            resolvers.push_back(std::make_shared<FixtureResolver>(path.string()));
        } else if (spec == "crossref") {
            resolvers.push_back(std::make_shared<CrossrefResolver>());
        } else if (spec == "arxiv") {
            resolvers.push_back(std::make_shared<ArxivResolver>());
        } else if (starts_with(spec, "crossref:")) {
            resolvers.push_back(std::make_shared<CrossrefResolver>(spec.substr(9)));
        } else if (starts_with(spec, "arxiv:")) {
            resolvers.push_back(std::make_shared<ArxivResolver>(spec.substr(6)));
        } else {
            raise(ErrorCode::InvalidConfig, "unknown resolver: " + spec);
        }
    }
    return resolvers;
}

Gateway make_gateway(Project& project) {
    BackendConfig config = BackendConfig::from_config(project.config());
    if (config.mode != BackendMode::Replay && config.transcript_dir.empty()) {
        // live and mock runs record transcripts into the project by default
        config.transcript_dir = project.transcripts_dir().string();
    }
    return Gateway(std::move(config));
}

void phase_verify(Project& project, const PipelineSetup& setup) {
    ensure_full_plan(project, setup);
    CorpusStore store(project);
    auto candidates = store.load_candidates();
    std::vector<std::shared_ptr<Resolver>> resolvers;
    bool any = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto& state = candidates[i];
        if (state.result || state.consumed) continue;
        if (!any) resolvers = build_resolvers(project);
        any = true;
        std::string step_id = verify_step_id(i);
        try {
            VerificationResult result =
                resolve(state.candidate, resolvers,
                        {project.config().verify_threshold, project.config().ambiguity_gap});
            state.result = result;
            // persist the result before marking the step done, so a crash
            // between the two re-verifies instead of losing the outcome
            store.save_candidates(candidates);
            json summary = {{"title", state.candidate.raw_title},
                            {"status", verification_status_name(result.status)}};
            ArtifactId artifact = project.put_artifact("verification", summary.dump() + "\n");
            project.log_done(step_id, {}, {artifact});
            count_completed_step();
        } catch (const Error& e) {
            // deferred, never silently not_found
            project.log_failed(step_id, e.what());
            throw;
        }
    }
}

void phase_extract(Project& project, const PipelineSetup& setup, Gateway& gateway) {
    ensure_full_plan(project, setup);
    CorpusStore store(project);
    std::vector<PaperRecord> papers = store.included();

    run_extraction(project, papers, setup.catalog, setup.extract_prompt_ids, gateway,
                   static_cast<int>(project.config().parallelism));

    std::map<std::string, StepStatus> status;
    for (const StepRecord& r : project.fold_runlog()) status[r.step_id] = r.status;

    for (const std::string& prompt_id : setup.extract_prompt_ids) {
        AggregateDocument doc = aggregate(project, papers, prompt_id);
        std::string rendered = render_aggregate(doc);
        std::string meta = aggregate_meta_json(doc);
        write_file_atomic(project.aggregates_dir() / (prompt_id + ".md"), rendered);
        write_file_atomic(project.aggregates_dir() / (prompt_id + ".meta.json"), meta);

        std::string step_id = aggregate_step_id(prompt_id);
        if (status[step_id] != StepStatus::Done) {
            ArtifactId doc_artifact = project.put_artifact("aggregate", rendered);
            ArtifactId meta_artifact = project.put_artifact("aggregate-meta", meta);
            project.log_done(step_id, {}, {doc_artifact, meta_artifact});
            count_completed_step();
        }
    }

    write_file_atomic(project.aggregates_dir() / "scores.csv",
                      scores_csv(project, papers, setup.extract_prompt_ids,
                                 project.config().terms));
}

void phase_analyze(Project& project, const PipelineSetup& setup, Gateway& gateway) {
    ensure_full_plan(project, setup);
    run_analysis(project, setup.plan, setup.catalog, gateway,
                 static_cast<int>(project.config().parallelism));
    write_file_atomic(project.analysis_dir() / "outline.json",
                      outline_set_json(collect_outlines(project)));
}

void phase_report(Project& project, const PipelineSetup& setup, const ReportOptions& options) {
    ensure_full_plan(project, setup);
    Report report = build_report(project, options);

    std::map<std::string, StepStatus> status;
    for (const StepRecord& r : project.fold_runlog()) status[r.step_id] = r.status;
    if (status.count("report:build") && status["report:build"] != StepStatus::Done) {
        std::vector<ArtifactId> outputs;
        for (const auto& [path, bytes] : report.data_files) {
            outputs.push_back(project.put_artifact("report", bytes));
        }
        project.log_done("report:build", {}, outputs);
        count_completed_step();
    }
}

void run_all(Project& project, const ReportOptions& report_options) {
    PipelineSetup setup = load_pipeline_setup(project);
    ensure_full_plan(project, setup);
    phase_verify(project, setup);
    Gateway gateway = make_gateway(project);
    phase_extract(project, setup, gateway);
    phase_analyze(project, setup, gateway);
    phase_report(project, setup, report_options);
}

bool resume(Project& project, const ReportOptions& report_options) {
    PipelineSetup setup = load_pipeline_setup(project);
    ensure_full_plan(project, setup);
    if (project.plan_resume().empty()) return false;
    phase_verify(project, setup);
    Gateway gateway = make_gateway(project);
    phase_extract(project, setup, gateway);
    phase_analyze(project, setup, gateway);
    phase_report(project, setup, report_options);
    return true;
}

} // namespace ceker
