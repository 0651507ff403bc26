#pragma once

#include "ceker/config.hpp"
#include "ceker/util.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ceker {

struct ProjectManifest {
    int schema_version = 1;
    std::string topic;
    std::string created_at;     // ISO 8601 UTC
    std::string config_digest;  // sha256 of canonicalized ceker.toml
};

// Content address of a stored artifact: the SHA-256 hex digest of its bytes.
struct ArtifactId {
    std::string digest;

    bool operator==(const ArtifactId& other) const { return digest == other.digest; }
    bool operator<(const ArtifactId& other) const { return digest < other.digest; }
};

enum class StepStatus { Pending, Done, Failed };

const char* step_status_name(StepStatus status);
StepStatus step_status_from_name(const std::string& name);

struct StepRecord {
    std::string step_id;  // e.g. "extract:P-1:paper-07"
    StepStatus status = StepStatus::Pending;
    std::vector<ArtifactId> inputs;
    std::vector<ArtifactId> outputs;
    std::optional<std::string> finished_at;
    std::optional<std::string> error;
};

// On-disk project: manifest.json, ceker.toml, runlog.jsonl, objects/ plus the
// standard pipeline directories. Single writer per project, atomic artifact
// writes, append-only run log.
class Project {
public:
    // pre: root exists (created if absent) and holds no manifest yet.
    static Project init(const fs::path& root, const std::string& config_content);
    // pre: root holds a manifest written by init.
    static Project open(const fs::path& root);
    static bool is_project(const fs::path& root);

    const fs::path& root() const { return root_; }
    const ProjectManifest& manifest() const { return manifest_; }
    const CekerConfig& config() const { return config_; }
    CekerConfig& config() { return config_; }

    fs::path corpus_dir() const { return root_ / "corpus"; }
    fs::path transcripts_dir() const { return root_ / "transcripts"; }
    fs::path aggregates_dir() const { return root_ / "aggregates"; }
    fs::path analysis_dir() const { return root_ / "analysis"; }
    fs::path report_dir() const { return root_ / "report"; }

    // ---- content-addressed artifacts ----
    ArtifactId put_artifact(const std::string& kind, std::string_view content);
    std::string get_artifact(const ArtifactId& id) const;
    bool has_artifact(const ArtifactId& id) const;

    // ---- run log ----
    // Appends a pending record unless the step was already logged.
    void log_pending(const std::string& step_id, const std::vector<ArtifactId>& inputs = {});
    void log_done(const std::string& step_id, const std::vector<ArtifactId>& inputs,
                  const std::vector<ArtifactId>& outputs);
    void log_failed(const std::string& step_id, const std::string& error);

    // Raw event sequence, oldest first.
    std::vector<StepRecord> read_runlog() const;
    // Latest status per step, in first-appearance order.
    std::vector<StepRecord> fold_runlog() const;
    // Steps whose latest status != done, in original run-log order.
    std::vector<StepRecord> plan_resume() const;

private:
    Project(fs::path root, ProjectManifest manifest, CekerConfig config)
        : root_(std::move(root)), manifest_(std::move(manifest)), config_(std::move(config)) {}

    fs::path runlog_path() const { return root_ / "runlog.jsonl"; }
    fs::path objects_dir() const { return root_ / "objects"; }
    fs::path object_path(const ArtifactId& id) const;
    void append_runlog(const StepRecord& record);

    fs::path root_;
    ProjectManifest manifest_;
    CekerConfig config_;
    std::unique_ptr<std::mutex> write_mutex_ = std::make_unique<std::mutex>();
    std::map<std::string, StepStatus> logged_;  // mirror of latest on-disk status
};

} // namespace ceker
