#include "ceker/corpus.hpp"

#include "ceker/prompts.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>

namespace ceker {

using nlohmann::json;

const char* paper_source_name(PaperSource source) {
    switch (source) {
        case PaperSource::Reused: return "reused";
        case PaperSource::Proposed: return "proposed";
        case PaperSource::Manual: return "manual";
    }
    return "reused";
}

PaperSource paper_source_from_name(const std::string& name) {
    if (name == "reused") return PaperSource::Reused;
    if (name == "proposed") return PaperSource::Proposed;
    if (name == "manual") return PaperSource::Manual;
    raise(ErrorCode::InvalidConfig, "unknown paper source: " + name);
}

std::string make_paper_id(int ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "paper-%02d", ordinal);
    return buf;
}

int paper_ordinal(const std::string& paper_id) {
    if (!starts_with(paper_id, "paper-")) {
        raise(ErrorCode::InvalidConfig, "bad paper id: " + paper_id);
    }
    return std::atoi(paper_id.c_str() + 6);
}

IngestResult ingest_reused(const std::vector<std::pair<std::string, fs::path>>& entries,
                           int existing_count) {
    IngestResult result;
    if (entries.empty()) {
        result.warnings.push_back({"EmptyCorpus", "no entries to ingest"});
        return result;
    }
    std::set<std::string> seen;
    int ordinal = existing_count;
    for (const auto& [title, path] : entries) {
        std::string normalized = normalize_title(title);
        if (seen.count(normalized)) {
            result.warnings.push_back(
                {"DuplicateCollapsed", "duplicate title collapsed: " + title});
            continue;
        }
        seen.insert(normalized);

        std::string text = read_file(path);  // UnreadableFile on failure
        if (!is_valid_utf8(text)) {
            raise(ErrorCode::InvalidEncoding, path.string() + " is not valid UTF-8");
        }

        PaperRecord r;
        r.paper_id = make_paper_id(++ordinal);
        r.title = title;
        r.text = std::move(text);
        r.source = PaperSource::Reused;
        r.included = true;
        result.records.push_back(std::move(r));
    }
    return result;
}

namespace {

std::string strip_emphasis(std::string s) {
    auto strip_pair = [&s](const char* mark) {
        std::size_t len = std::strlen(mark);
        while (s.size() >= 2 * len && starts_with(s, mark) && ends_with(s, mark)) {
            s = s.substr(len, s.size() - 2 * len);
        }
    };
    s = trim(s);
    strip_pair("**");
    strip_pair("__");
    strip_pair("*");
    strip_pair("_");
    return trim(s);
}

} // namespace

std::vector<CandidateCitation> parse_numbered_titles(const std::string& reply) {
    std::vector<CandidateCitation> out;
    for (const std::string& raw : split_lines(reply)) {
        std::string line = trim(raw);
        std::size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == 0 || i >= line.size()) continue;
        if (line[i] != '.' && line[i] != ')') continue;
        std::string title = strip_emphasis(line.substr(i + 1));
        if (title.empty()) continue;
        CandidateCitation c;
        c.raw_title = title;
        c.origin = "llm_proposed";
        c.batch_index = std::atoi(line.substr(0, i).c_str());
        out.push_back(std::move(c));
    }
    return out;
}

ProposalResult propose_candidates(const std::string& topic, int count, Gateway& gateway,
                                  int batch_number) {
    if (count < 1) {
        raise(ErrorCode::InvalidConfig, "candidate count must be >= 1");
    }
    PromptCatalog catalog = PromptCatalog::builtin();
    std::string prompt = render(catalog.get("C-1"),
                                {{"COUNT", std::to_string(count)}, {"TOPIC", topic}});

    char tag[48];
    std::snprintf(tag, sizeof(tag), "collect:batch-%02d", batch_number);
    Session session = gateway.open_session(tag);
    LlmResponse reply = gateway.send(session, prompt);

    ProposalResult result;
    result.raw_response = reply.text;
    result.candidates = parse_numbered_titles(reply.text);
    if (result.candidates.empty()) {
        raise(ErrorCode::EmptyProposal, "reply contains no numbered titles");
    }
    if (static_cast<int>(result.candidates.size()) < count) {
        result.warnings.push_back(
            {"ShortBatch", "asked for " + std::to_string(count) + " titles, parsed " +
                               std::to_string(result.candidates.size())});
    }
    return result;
}

VetOutcome vet(const std::vector<CandidateCitation>& candidates,
               const std::vector<VerificationResult>& results,
               const std::vector<VetDecision>& decisions,
               const std::vector<std::string>& existing_titles, int existing_count) {
    if (candidates.size() != results.size()) {
        raise(ErrorCode::InvalidConfig, "one verification result per candidate required");
    }

    auto find_decision = [&decisions](const std::string& title) -> const VetDecision* {
        for (auto it = decisions.rbegin(); it != decisions.rend(); ++it) {
            if (it->candidate_title == title) return &*it;  // latest decision wins
        }
        return nullptr;
    };

    std::set<std::string> known(existing_titles.begin(), existing_titles.end());
    VetOutcome outcome;
    int ordinal = existing_count;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const CandidateCitation& candidate = candidates[i];
        VerificationResult result = results[i];
        const VetDecision* decision = find_decision(candidate.raw_title);

        bool accept = false;
        std::string exclude_reason;
        switch (result.status) {
            case VerificationStatus::Verified:
                if (decision != nullptr && decision->decision == "reject") {
                    exclude_reason = "rejected";
                } else {
                    accept = true;
                }
                break;
            case VerificationStatus::Ambiguous:
                if (decision == nullptr) {
                    raise(ErrorCode::MissingDecision,
                          "ambiguous candidate needs a human decision: " + candidate.raw_title);
                }
                if (decision->decision == "accept") {
                    accept = true;
                    result.status = VerificationStatus::Overridden;
                } else {
                    exclude_reason = "rejected";
                }
                break;
            case VerificationStatus::NotFound:
            case VerificationStatus::Overridden:
                if (decision != nullptr && decision->decision == "accept") {
                    accept = true;
                    result.status = VerificationStatus::Overridden;
                } else {
                    exclude_reason = decision != nullptr ? "rejected" : "unverified";
                }
                break;
        }

        if (!accept) {
            outcome.exclusions.emplace_back(candidate, exclude_reason);
            continue;
        }

        std::string normalized = normalize_title(candidate.raw_title);
        if (known.count(normalized)) {
            outcome.exclusions.emplace_back(candidate, "duplicate");
            outcome.warnings.push_back(
                {"DuplicateCollapsed", "candidate duplicates an included title: " + candidate.raw_title});
            continue;
        }
        known.insert(normalized);

        PaperRecord r;
        r.paper_id = make_paper_id(++ordinal);
        r.title = candidate.raw_title;
        r.source = PaperSource::Proposed;
        r.verification = result;
        r.included = true;  // text arrives later via `corpus attach`
        outcome.additions.push_back(std::move(r));
    }
    return outcome;
}

CollectDecision should_stop(const std::vector<BatchOutcome>& batch_history,
                            const CollectionPolicy& policy, int corpus_size) {
    if (policy.max_corpus > 0 && corpus_size >= policy.max_corpus) {
        return CollectDecision::Stop;
    }
    if (batch_history.empty()) {
        raise(ErrorCode::InvalidConfig, "batch history required to evaluate the stop rule");
    }
    const BatchOutcome& last = batch_history.back();
    if (last.proposed <= 0) return CollectDecision::Stop;
    double rate = static_cast<double>(last.new_unique_verified) / last.proposed;
    return rate < policy.stop_threshold ? CollectDecision::Stop : CollectDecision::Continue;
}

// ---- persistence ------------------------------------------------------------

namespace {

json verification_to_json(const VerificationResult& v) {
    json j;
    j["status"] = verification_status_name(v.status);
    j["threshold_used"] = v.threshold_used;
    if (v.best_match) {
        j["best_match"] = {{"source", v.best_match->source},
                           {"matched_title", v.best_match->matched_title},
                           {"external_id", v.best_match->external_id},
                           {"similarity", v.best_match->similarity}};
    }
    return j;
}

VerificationResult verification_from_json(const json& j) {
    VerificationResult v;
    v.status = verification_status_from_name(j.at("status").get<std::string>());
    v.threshold_used = j.value("threshold_used", 0.90);
    if (j.contains("best_match")) {
        ResolverMatch m;
        const json& b = j["best_match"];
        m.source = b.value("source", "");
        m.matched_title = b.value("matched_title", "");
        m.external_id = b.value("external_id", "");
        m.similarity = b.value("similarity", 0.0);
        v.best_match = m;
    }
    return v;
}

} // namespace

CorpusStore::CorpusStore(Project& project) : project_(project) {}

std::vector<PaperRecord> CorpusStore::load() const {
    std::vector<PaperRecord> records;
    auto text = try_read_file(project_.corpus_dir() / "index.json");
    if (!text) return records;
    json arr = json::parse(*text);
    for (const json& j : arr) {
        PaperRecord r;
        r.paper_id = j.at("paper_id").get<std::string>();
        r.title = j.at("title").get<std::string>();
        r.source = paper_source_from_name(j.at("source").get<std::string>());
        r.included = j.at("included").get<bool>();
        if (j.contains("verification")) {
            r.verification = verification_from_json(j["verification"]);
        }
        auto body = try_read_file(project_.corpus_dir() / (r.paper_id + ".txt"));
        if (body) r.text = std::move(*body);
        records.push_back(std::move(r));
    }
    return records;
}

void CorpusStore::save(const std::vector<PaperRecord>& records) {
    json arr = json::array();
    for (const PaperRecord& r : records) {
        json j;
        j["paper_id"] = r.paper_id;
        j["title"] = r.title;
        j["source"] = paper_source_name(r.source);
        j["included"] = r.included;
        if (r.verification) j["verification"] = verification_to_json(*r.verification);
        arr.push_back(std::move(j));
        if (!r.text.empty()) {
            write_file_atomic(project_.corpus_dir() / (r.paper_id + ".txt"), r.text);
        }
    }
    write_file_atomic(project_.corpus_dir() / "index.json", arr.dump(2) + "\n");
}

void CorpusStore::append_records(const std::vector<PaperRecord>& additions) {
    std::vector<PaperRecord> all = load();
    all.insert(all.end(), additions.begin(), additions.end());
    save(all);
}

void CorpusStore::attach_text(const std::string& paper_id, const std::string& text) {
    if (!is_valid_utf8(text)) {
        raise(ErrorCode::InvalidEncoding, "attached text is not valid UTF-8");
    }
    std::vector<PaperRecord> all = load();
    for (PaperRecord& r : all) {
        if (r.paper_id == paper_id) {
            r.text = text;
            write_file_atomic(project_.corpus_dir() / (paper_id + ".txt"), text);
            return;
        }
    }
    raise(ErrorCode::InvalidConfig, "no such paper: " + paper_id);
}

std::vector<PaperRecord> CorpusStore::included() const {
    std::vector<PaperRecord> out;
    for (PaperRecord& r : load()) {
        if (r.included) out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const PaperRecord& a, const PaperRecord& b) {
        return paper_ordinal(a.paper_id) < paper_ordinal(b.paper_id);
    });
    return out;
}

std::vector<CorpusStore::CandidateState> CorpusStore::load_candidates() const {
    std::vector<CandidateState> out;
    auto text = try_read_file(project_.corpus_dir() / "candidates.json");
    if (!text) return out;
    for (const json& j : json::parse(*text)) {
        CandidateState s;
        s.candidate.raw_title = j.at("raw_title").get<std::string>();
        s.candidate.origin = j.value("origin", "llm_proposed");
        s.candidate.batch_index = j.value("batch_index", 0);
        s.batch = j.value("batch", 1);
        s.consumed = j.value("consumed", false);
        if (j.contains("verification")) {
            s.result = verification_from_json(j["verification"]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void CorpusStore::save_candidates(const std::vector<CandidateState>& states) {
    json arr = json::array();
    for (const CandidateState& s : states) {
        json j;
        j["raw_title"] = s.candidate.raw_title;
        j["origin"] = s.candidate.origin;
        j["batch_index"] = s.candidate.batch_index;
        j["batch"] = s.batch;
        j["consumed"] = s.consumed;
        if (s.result) j["verification"] = verification_to_json(*s.result);
        arr.push_back(std::move(j));
    }
    write_file_atomic(project_.corpus_dir() / "candidates.json", arr.dump(2) + "\n");
}

void CorpusStore::append_decision(const VetDecision& decision) {
    json j = {{"title", decision.candidate_title}, {"decision", decision.decision},
              {"note", decision.note},             {"decided_at", decision.decided_at},
              {"decided_by", decision.decided_by}};
    append_line(project_.corpus_dir() / "decisions.jsonl", j.dump());
}

std::vector<VetDecision> CorpusStore::load_decisions() const {
    std::vector<VetDecision> out;
    auto text = try_read_file(project_.corpus_dir() / "decisions.jsonl");
    if (!text) return out;
    for (const std::string& line : split_lines(*text)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        VetDecision d;
        d.candidate_title = j.at("title").get<std::string>();
        d.decision = j.at("decision").get<std::string>();
        d.note = j.value("note", "");
        d.decided_at = j.value("decided_at", "");
        d.decided_by = j.value("decided_by", "human");
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace ceker
