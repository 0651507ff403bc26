#include "ceker/project_store.hpp"

#include "ceker/digest.hpp"
#include "ceker/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace ceker {

using nlohmann::json;

namespace {

const char* kManifestFile = "manifest.json";
const char* kConfigFile = "ceker.toml";

const char* kStandardDirs[] = {"corpus", "transcripts", "aggregates",
                               "analysis", "report", "objects"};

json record_to_json(const StepRecord& r) {
    json j;
    j["step"] = r.step_id;
    j["status"] = step_status_name(r.status);
    json in = json::array();
    for (const auto& a : r.inputs) in.push_back(a.digest);
    json out = json::array();
    for (const auto& a : r.outputs) out.push_back(a.digest);
    j["inputs"] = in;
    j["outputs"] = out;
    if (r.finished_at) j["finished_at"] = *r.finished_at;
    if (r.error) j["error"] = *r.error;
    return j;
}

StepRecord record_from_json(const json& j) {
    StepRecord r;
    r.step_id = j.at("step").get<std::string>();
    r.status = step_status_from_name(j.at("status").get<std::string>());
    for (const auto& d : j.at("inputs")) r.inputs.push_back({d.get<std::string>()});
    for (const auto& d : j.at("outputs")) r.outputs.push_back({d.get<std::string>()});
    if (j.contains("finished_at")) r.finished_at = j["finished_at"].get<std::string>();
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    return r;
}

} // namespace

const char* step_status_name(StepStatus status) {
    switch (status) {
        case StepStatus::Pending: return "pending";
        case StepStatus::Done: return "done";
        case StepStatus::Failed: return "failed";
    }
    return "pending";
}

StepStatus step_status_from_name(const std::string& name) {
    if (name == "pending") return StepStatus::Pending;
    if (name == "done") return StepStatus::Done;
    if (name == "failed") return StepStatus::Failed;
    raise(ErrorCode::CorruptRunLog, "unknown step status: " + name);
}

bool Project::is_project(const fs::path& root) {
    return fs::exists(root / kManifestFile);
}

Project Project::init(const fs::path& root, const std::string& config_content) {
    ensure_dir(root);
    if (is_project(root)) {
        raise(ErrorCode::AlreadyInitialized, root.string() + " already holds a ceker project");
    }
    for (const char* d : kStandardDirs) ensure_dir(root / d);

    write_file_atomic(root / kConfigFile, config_content);

    ProjectManifest m;
    m.schema_version = 1;
    m.created_at = now_iso8601_utc();
    m.config_digest = sha256_hex(canonicalize_config(config_content));
    CekerConfig config = CekerConfig::from_toml(config_content);
    m.topic = config.topic;

    json j;
    j["schema_version"] = m.schema_version;
    j["topic"] = m.topic;
    j["created_at"] = m.created_at;
    j["config_digest"] = m.config_digest;
    write_file_atomic(root / kManifestFile, j.dump(2) + "\n");

    // empty run log
    write_file_atomic(root / "runlog.jsonl", "");

    return Project(root, std::move(m), std::move(config));
}

Project Project::open(const fs::path& root) {
    if (!is_project(root)) {
        raise(ErrorCode::NotAProject, root.string() + " holds no ceker project (missing manifest.json)");
    }
    json j;
    try {
        j = json::parse(read_file(root / kManifestFile));
    } catch (const json::exception& e) {
        raise(ErrorCode::IoError, std::string("cannot parse manifest.json: ") + e.what());
    }
    ProjectManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.topic = j.value("topic", "");
    m.created_at = j.value("created_at", "");
    m.config_digest = j.value("config_digest", "");

    CekerConfig config = CekerConfig::from_toml(read_file(root / kConfigFile));

    Project p(root, std::move(m), std::move(config));
    for (const StepRecord& r : p.fold_runlog()) {
        p.logged_[r.step_id] = r.status;
    }
    return p;
}

fs::path Project::object_path(const ArtifactId& id) const {
    return objects_dir() / id.digest.substr(0, 2) / id.digest;
}

ArtifactId Project::put_artifact(const std::string& kind, std::string_view content) {
    (void)kind;  // advisory label; the store is purely content-addressed
    ArtifactId id{sha256_hex(content)};
    std::lock_guard<std::mutex> lock(*write_mutex_);
    fs::path path = object_path(id);
    if (!fs::exists(path)) {
        ensure_dir(path.parent_path());
        write_file_atomic(path, content);
    }
    return id;
}

std::string Project::get_artifact(const ArtifactId& id) const {
    return read_file(object_path(id));
}

bool Project::has_artifact(const ArtifactId& id) const {
    return fs::exists(object_path(id));
}

void Project::append_runlog(const StepRecord& record) {
    std::lock_guard<std::mutex> lock(*write_mutex_);
    append_line(runlog_path(), record_to_json(record).dump());
    logged_[record.step_id] = record.status;
}

void Project::log_pending(const std::string& step_id, const std::vector<ArtifactId>& inputs) {
    {
        std::lock_guard<std::mutex> lock(*write_mutex_);
        if (logged_.count(step_id)) return;
    }
    StepRecord r;
    r.step_id = step_id;
    r.status = StepStatus::Pending;
    r.inputs = inputs;
    append_runlog(r);
}

void Project::log_done(const std::string& step_id, const std::vector<ArtifactId>& inputs,
                       const std::vector<ArtifactId>& outputs) {
    if (outputs.empty()) {
        raise(ErrorCode::IoError, "step " + step_id + " marked done without outputs");
    }
    StepRecord r;
    r.step_id = step_id;
    r.status = StepStatus::Done;
    r.inputs = inputs;
    r.outputs = outputs;
    r.finished_at = now_iso8601_utc();
    append_runlog(r);
}

void Project::log_failed(const std::string& step_id, const std::string& error) {
    StepRecord r;
    r.step_id = step_id;
    r.status = StepStatus::Failed;
    r.finished_at = now_iso8601_utc();
    r.error = error;
    append_runlog(r);
}

std::vector<StepRecord> Project::read_runlog() const {
    std::vector<StepRecord> records;
    std::ifstream in(runlog_path(), std::ios::binary);
    if (!in) return records;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            // A final line without its terminating newline is an append that
            // never completed (crash mid-write); resume ignores it.
            break;
        }
        ++line_no;
        std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (trim(line).empty()) continue;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            raise(ErrorCode::CorruptRunLog,
                  "runlog.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::vector<StepRecord> Project::fold_runlog() const {
    std::vector<StepRecord> folded;
    std::map<std::string, std::size_t> index;
    for (const StepRecord& r : read_runlog()) {
        auto it = index.find(r.step_id);
        if (it == index.end()) {
            index[r.step_id] = folded.size();
            folded.push_back(r);
        } else {
            folded[it->second] = r;
        }
    }
    return folded;
}

std::vector<StepRecord> Project::plan_resume() const {
    std::vector<StepRecord> pending;
    for (const StepRecord& r : fold_runlog()) {
        if (r.status != StepStatus::Done) pending.push_back(r);
    }
    return pending;
}

} // namespace ceker
