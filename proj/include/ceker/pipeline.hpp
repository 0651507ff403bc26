#pragma once

#include "ceker/analysis.hpp"
#include "ceker/bibliography.hpp"
#include "ceker/corpus.hpp"
#include "ceker/extraction.hpp"
#include "ceker/gateway.hpp"
#include "ceker/project_store.hpp"
#include "ceker/prompts.hpp"
#include "ceker/reporting.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ceker {

// The pipeline as planned from current project state: prompt catalog (built-in
// plus the configured user set), extract prompt order, analysis plan.
struct PipelineSetup {
    PromptCatalog catalog;
    std::vector<std::string> extract_prompt_ids;
    AnalysisPlan plan;
};

PipelineSetup load_pipeline_setup(Project& project);

// Appends pending run-log records for every step of the configured pipeline
// that is not logged yet (verify, extract, aggregate, analyze, report). Phase
// commands call this first so an interrupted run always knows its remaining
// work.
void ensure_full_plan(Project& project, const PipelineSetup& setup);

std::vector<std::shared_ptr<Resolver>> build_resolvers(Project& project);
Gateway make_gateway(Project& project);

// Resolves all pending candidates. Results land in corpus/candidates.json and
// the run log; verification never runs interactively.
void phase_verify(Project& project, const PipelineSetup& setup);

// Step 2: extraction runs plus aggregate documents and scores.csv.
void phase_extract(Project& project, const PipelineSetup& setup, Gateway& gateway);

// Step 3: analysis runs plus analysis/outline.json.
void phase_analyze(Project& project, const PipelineSetup& setup, Gateway& gateway);

void phase_report(Project& project, const PipelineSetup& setup, const ReportOptions& options);

// corpus verify && extract && analyze && report.
void run_all(Project& project, const ReportOptions& report_options);

// Executes whatever plan_resume still lists. Returns false when there was
// nothing to do.
bool resume(Project& project, const ReportOptions& report_options);

} // namespace ceker
