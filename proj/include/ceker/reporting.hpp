#pragma once

#include "ceker/analysis.hpp"
#include "ceker/project_store.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ceker {

struct ChartSeries {
    std::string title;
    std::vector<std::pair<std::string, std::int64_t>> rows;  // sorted by count desc, label asc
};

ChartSeries chart_from_table(const std::string& title, const FrequencyTable& table);

// CSV bytes: header `label,count`, LF endings, labels quoted when needed.
std::string emit_chart_data(const ChartSeries& series);

struct Report {
    std::vector<std::pair<std::string, std::string>> sections;  // (section_id, markdown)
    std::vector<std::pair<std::string, std::string>> data_files;  // (relative path, bytes)
};

struct ReportOptions {
    bool partial = false;
    std::string baseline_csv_path;  // overrides the configured baseline
};

// Assembles report/report.md, report/report.json and report/charts/*.csv from
// the project's artifacts. Deterministic given fixed artifacts; sections with
// nothing to say carry the literal line "none identified".
Report build_report(Project& project, const ReportOptions& options = {});

} // namespace ceker
