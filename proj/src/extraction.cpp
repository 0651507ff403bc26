#include "ceker/extraction.hpp"

#include "ceker/digest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ceker {

using nlohmann::json;

const char* const kExtractStepPrefix = "extract";

std::string RelevanceScore::value_text() const {
    return format_hundredths(value_hundredths);
}

std::string extract_step_id(const std::string& prompt_id, const std::string& paper_id) {
    return std::string(kExtractStepPrefix) + ":" + prompt_id + ":" + paper_id;
}

// ---- score parsing ----------------------------------------------------------

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// First case-insensitive whole-phrase occurrence of term in line.
std::size_t find_term(const std::string& line, const std::string& term) {
    std::string lower_line = to_lower_ascii(line);
    std::string lower_term = to_lower_ascii(term);
    std::size_t pos = 0;
    while ((pos = lower_line.find(lower_term, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(line[pos - 1]);
        std::size_t end = pos + term.size();
        bool right_ok = end >= line.size() || !is_word_char(line[end]);
        if (left_ok && right_ok) return pos;
        ++pos;
    }
    return std::string::npos;
}

struct NumberToken {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool negative = false;
    std::string integer;   // digits before '.'
    std::string fraction;  // digits after '.'
};

// First numeric token at or after `from`. Tokens are [-]digits[.digits].
std::optional<NumberToken> scan_number(const std::string& line, std::size_t from) {
    for (std::size_t i = from; i < line.size(); ++i) {
        bool neg = line[i] == '-' && i + 1 < line.size() &&
                   std::isdigit(static_cast<unsigned char>(line[i + 1]));
        if (!neg && !std::isdigit(static_cast<unsigned char>(line[i]))) continue;
        // avoid chopping the tail off an identifier like "x86-0.5"
        if (i > 0 && is_word_char(line[i - 1])) continue;

        NumberToken tok;
        tok.begin = i;
        tok.negative = neg;
        std::size_t j = i + (neg ? 1 : 0);
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
            tok.integer += line[j++];
        }
        if (j < line.size() && line[j] == '.' && j + 1 < line.size() &&
            std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
            ++j;
            while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
                tok.fraction += line[j++];
            }
        }
        tok.end = j;
        return tok;
    }
    return std::nullopt;
}

// Score attempts are decimal tokens (0.85, 1.5, -0.25) and the bare integers
// 0/1. Other bare integers are prose ("in 3 papers") and never score attempts.
bool is_score_attempt(const NumberToken& tok) {
    if (!tok.fraction.empty()) return true;
    return !tok.negative && (tok.integer == "0" || tok.integer == "1");
}

// Well-formed scores are \d.\d\d (or bare 0/1); in-range decimals with other
// precision are ignored, anything out of [0.00, 1.00] is an error.
std::optional<int> token_to_hundredths(const NumberToken& tok, const std::string& term) {
    double magnitude =
        std::atof((tok.integer + "." + (tok.fraction.empty() ? "0" : tok.fraction)).c_str());
    double value = tok.negative ? -magnitude : magnitude;
    if (value < 0.0 || value > 1.0) {
        raise(ErrorCode::OutOfRange,
              term + ": score " + (tok.negative ? "-" : "") + tok.integer +
                  (tok.fraction.empty() ? "" : "." + tok.fraction) + " is outside 0.00-1.00");
    }
    if (tok.fraction.size() == 2) {
        return std::atoi(tok.integer.c_str()) * 100 + std::atoi(tok.fraction.c_str());
    }
    if (tok.fraction.empty() && (tok.integer == "0" || tok.integer == "1")) {
        return tok.integer == "1" ? 100 : 0;
    }
    return std::nullopt;  // in range but not two-decimal: not a score token
}

std::optional<std::string> scan_confidence(const std::string& line, std::size_t from,
                                           std::size_t* end) {
    std::string lower = to_lower_ascii(line.substr(from));
    std::optional<std::string> best;
    std::size_t best_at = std::string::npos;
    for (const char* level : {"low", "medium", "high"}) {
        std::string pattern = std::string("(") + level + ")";
        std::size_t at = lower.find(pattern);
        if (at != std::string::npos && at < best_at) {
            best_at = at;
            best = level;
            *end = from + at + pattern.size();
        }
    }
    return best;
}

} // namespace

ParsedScores parse_scores(const std::string& text, const std::vector<std::string>& expected_terms) {
    ParsedScores out;
    std::vector<std::string> lines = split_lines(text);

    for (const std::string& term : expected_terms) {
        bool found = false;
        for (const std::string& line : lines) {
            std::size_t term_at = find_term(line, term);
            if (term_at == std::string::npos) continue;

            // first score attempt after the term on this line
            std::optional<NumberToken> tok;
            std::size_t from = term_at + term.size();
            while (true) {
                tok = scan_number(line, from);
                if (!tok || is_score_attempt(*tok)) break;
                from = tok->end;
            }
            if (!tok) continue;
            auto hundredths = token_to_hundredths(*tok, term);
            if (!hundredths) continue;

            if (found) {
                out.warnings.push_back(
                    {"DuplicateTerm", term + " scored more than once; first value kept"});
                break;
            }
            found = true;

            RelevanceScore score;
            score.term = term;
            score.value_hundredths = *hundredths;
            std::size_t rest_at = tok->end;
            std::size_t conf_end = rest_at;
            score.confidence = scan_confidence(line, rest_at, &conf_end);
            if (score.confidence) rest_at = conf_end;
            score.explanation = trim(line.substr(rest_at));
            out.scores.push_back(std::move(score));
        }
    }
    return out;
}

// ---- extraction run ----------------------------------------------------------

namespace {

std::string paper_document_name(const PaperRecord& paper) {
    return paper.paper_id + ": " + paper.title;
}

} // namespace

ExtractionRunSummary run_extraction(Project& project, const std::vector<PaperRecord>& papers,
                                    const PromptCatalog& catalog,
                                    const std::vector<std::string>& prompt_ids, Gateway& gateway,
                                    int parallelism) {
    if (papers.empty()) {
        raise(ErrorCode::EmptyCorpus, "extraction needs a non-empty corpus");
    }
    if (prompt_ids.empty()) {
        raise(ErrorCode::EmptyPromptSet, "extraction needs at least one prompt");
    }
    for (const PaperRecord& paper : papers) {
        if (paper.text.empty()) {
            raise(ErrorCode::MissingPaperText,
                  paper.paper_id + " is included but has no text attached");
        }
    }

    Bindings available = {{"TERMS", join_terms(project.config().terms)},
                          {"TOPIC", project.config().topic}};
    std::vector<std::string> rendered;
    rendered.reserve(prompt_ids.size());
    for (const std::string& id : prompt_ids) {
        const PromptTemplate& tmpl = catalog.get(id);
        rendered.push_back(render(tmpl, bindings_subset(tmpl, available)));
    }

    // Full plan first, so an interrupted run already knows every step.
    std::vector<StepRecord> folded = project.fold_runlog();
    std::map<std::string, StepRecord> status;
    for (StepRecord& r : folded) status[r.step_id] = r;
    for (const PaperRecord& paper : papers) {
        for (const std::string& id : prompt_ids) {
            project.log_pending(extract_step_id(id, paper.paper_id));
        }
    }

    ExtractionRunSummary summary;
    summary.steps_total = papers.size() * prompt_ids.size();
    std::mutex summary_mutex;

    parallel_for_each(papers.size(), parallelism, [&](std::size_t index) {
        const PaperRecord& paper = papers[index];
        Session session = gateway.open_session("extract:" + paper.paper_id);

        for (std::size_t k = 0; k < prompt_ids.size(); ++k) {
            std::string message =
                k == 0 ? frame_document(paper_document_name(paper), paper.text) + "\n\n" + rendered[0]
                       : rendered[k];
            std::string step_id = extract_step_id(prompt_ids[k], paper.paper_id);

            auto it = status.find(step_id);
            if (it != status.end() && it->second.status == StepStatus::Done) {
                // Rebuild the session history byte-for-byte from the stored reply.
                std::string reply = project.get_artifact(it->second.outputs.at(0));
                session.push_exchange(message, reply);
                std::lock_guard<std::mutex> lock(summary_mutex);
                ++summary.steps_replayed;
                continue;
            }

            try {
                LlmResponse reply = gateway.send(session, message);
                ArtifactId artifact = project.put_artifact("extraction-response", reply.text);
                project.log_done(step_id, {}, {artifact});
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Aborted) {
                    project.log_failed(step_id, e.what());
                }
                throw;
            }
            {
                std::lock_guard<std::mutex> lock(summary_mutex);
                ++summary.steps_executed;
            }
            count_completed_step();
        }
    });

    return summary;
}

namespace {

ExtractionResponse load_response(Project& project, const std::map<std::string, StepRecord>& status,
                                 const std::string& prompt_id, const std::string& paper_id) {
    auto it = status.find(extract_step_id(prompt_id, paper_id));
    if (it == status.end() || it->second.status != StepStatus::Done || it->second.outputs.empty()) {
        raise(ErrorCode::IncompleteRun,
              "no completed response for " + prompt_id + " on " + paper_id);
    }
    ExtractionResponse r;
    r.paper_id = paper_id;
    r.prompt_id = prompt_id;
    r.text = project.get_artifact(it->second.outputs.front());
    r.word_count = word_count(r.text);
    return r;
}

} // namespace

AggregateDocument aggregate(Project& project, const std::vector<PaperRecord>& papers,
                            const std::string& prompt_id) {
    std::vector<PaperRecord> sorted = papers;
    std::sort(sorted.begin(), sorted.end(), [](const PaperRecord& a, const PaperRecord& b) {
        return paper_ordinal(a.paper_id) < paper_ordinal(b.paper_id);
    });

    std::map<std::string, StepRecord> status;
    for (StepRecord& r : project.fold_runlog()) status[r.step_id] = r;

    AggregateDocument doc;
    doc.prompt_id = prompt_id;
    for (const PaperRecord& paper : sorted) {
        if (!paper.included) continue;
        ExtractionResponse response = load_response(project, status, prompt_id, paper.paper_id);
        AggregateBlock block;
        block.paper_id = paper.paper_id;
        block.text = std::move(response.text);
        block.word_count = response.word_count;
        doc.total_word_count += block.word_count;
        doc.blocks.push_back(std::move(block));
    }
    return doc;
}

std::string render_aggregate(const AggregateDocument& doc) {
    std::string out;
    for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
        out += "### Response " + std::to_string(i + 1) + " — " + doc.blocks[i].paper_id + "\n\n";
        out += doc.blocks[i].text;
        out += "\n\n";
    }
    return out;
}

std::string aggregate_meta_json(const AggregateDocument& doc) {
    json blocks = json::array();
    for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
        blocks.push_back({{"index", i + 1},
                          {"paper_id", doc.blocks[i].paper_id},
                          {"word_count", doc.blocks[i].word_count}});
    }
    json j = {{"prompt_id", doc.prompt_id},
              {"total_word_count", doc.total_word_count},
              {"blocks", blocks}};
    return j.dump(2) + "\n";
}

OffTopicReport flag_off_topic(Project& project, const std::vector<PaperRecord>& papers,
                              const std::vector<std::string>& prompt_ids,
                              const std::vector<std::string>& terms, double threshold) {
    std::map<std::string, StepRecord> status;
    for (StepRecord& r : project.fold_runlog()) status[r.step_id] = r;

    OffTopicReport report;
    for (const PaperRecord& paper : papers) {
        if (!paper.included) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (const std::string& prompt_id : prompt_ids) {
            ExtractionResponse response = load_response(project, status, prompt_id, paper.paper_id);
            try {
                ParsedScores parsed = parse_scores(response.text, terms);
                for (const RelevanceScore& s : parsed.scores) {
                    sum += s.value();
                    ++count;
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::OutOfRange) throw;
                report.warnings.push_back(
                    {"OutOfRange", paper.paper_id + "/" + prompt_id + ": " + e.what()});
            }
        }
        if (count == 0) {
            report.unscored.push_back(paper.paper_id);
        } else if (sum / static_cast<double>(count) < threshold) {
            report.flagged.emplace_back(paper.paper_id, sum / static_cast<double>(count));
        }
    }
    return report;
}

std::string scores_csv(Project& project, const std::vector<PaperRecord>& papers,
                       const std::vector<std::string>& prompt_ids,
                       const std::vector<std::string>& terms) {
    std::map<std::string, StepRecord> status;
    for (StepRecord& r : project.fold_runlog()) status[r.step_id] = r;

    std::string csv = "paper_id,prompt_id,term,value,confidence\n";
    std::vector<PaperRecord> sorted = papers;
    std::sort(sorted.begin(), sorted.end(), [](const PaperRecord& a, const PaperRecord& b) {
        return paper_ordinal(a.paper_id) < paper_ordinal(b.paper_id);
    });
    for (const PaperRecord& paper : sorted) {
        if (!paper.included) continue;
        for (const std::string& prompt_id : prompt_ids) {
            ExtractionResponse response = load_response(project, status, prompt_id, paper.paper_id);
            ParsedScores parsed;
            try {
                parsed = parse_scores(response.text, terms);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::OutOfRange) throw;
                continue;  // surfaced via flag_off_topic warnings
            }
            for (const RelevanceScore& s : parsed.scores) {
                csv += paper.paper_id + "," + prompt_id + "," + s.term + "," + s.value_text() +
                       "," + (s.confidence ? *s.confidence : "") + "\n";
            }
        }
    }
    return csv;
}

// ---- combined document --------------------------------------------------------

namespace {

// Titles are header metadata; control characters would break the line format.
std::string header_safe(const std::string& title) {
    std::string out = title;
    for (char& c : out) {
        if (static_cast<unsigned char>(c) < 0x20) c = ' ';
    }
    return out;
}

std::string delimiter_line(const std::string& token, const PaperRecord& paper) {
    return "===== " + token + " " + paper.paper_id + ": " + header_safe(paper.title) + " =====";
}

bool looks_like_delimiter(const std::string& line, const std::string& token) {
    return starts_with(line, "===== " + token + " paper-") && ends_with(line, " =====");
}

} // namespace

std::string build_combined_document(const std::vector<PaperRecord>& papers,
                                    const std::string& delimiter_label) {
    std::vector<const PaperRecord*> included;
    for (const PaperRecord& p : papers) {
        if (p.included) included.push_back(&p);
    }
    if (included.empty()) {
        raise(ErrorCode::EmptyCorpus, "cannot build a combined document from an empty corpus");
    }

    // Bump the token with a digest fragment until no text line could be read
    // back as a delimiter of this document.
    std::string token = delimiter_label;
    while (true) {
        bool collision = false;
        for (const PaperRecord* p : included) {
            for (const std::string& line : split_lines(p->text)) {
                if (looks_like_delimiter(line, token)) {
                    collision = true;
                    break;
                }
            }
            if (collision) break;
        }
        if (!collision) break;
        std::string all;
        for (const PaperRecord* p : included) all += p->text;
        token = delimiter_label + "#" + sha256_hex(all + token).substr(0, 8);
    }

    std::string doc;
    for (const PaperRecord* p : included) {
        doc += delimiter_line(token, *p);
        doc += "\n";
        doc += p->text;
        doc += "\n";
    }
    return doc;
}

std::vector<CombinedPart> split_combined_document(const std::string& document,
                                                  const std::string& delimiter_label) {
    std::vector<CombinedPart> parts;
    if (document.empty()) return parts;

    // Recover the effective token from the first delimiter line.
    std::size_t first_nl = document.find('\n');
    std::string first_line =
        first_nl == std::string::npos ? document : document.substr(0, first_nl);
    std::string token;
    if (looks_like_delimiter(first_line, delimiter_label)) {
        token = delimiter_label;
    } else {
        std::string prefix = "===== " + delimiter_label + "#";
        if (starts_with(first_line, prefix) && first_line.size() > prefix.size() + 8 &&
            looks_like_delimiter(first_line, delimiter_label + "#" +
                                                 first_line.substr(prefix.size(), 8))) {
            token = delimiter_label + "#" + first_line.substr(prefix.size(), 8);
        } else {
            raise(ErrorCode::InvalidConfig, "document does not start with a delimiter line");
        }
    }

    std::string header_prefix = "===== " + token + " ";
    auto parse_header = [&](const std::string& line, CombinedPart& part) {
        std::string inner = line.substr(header_prefix.size(),
                                        line.size() - header_prefix.size() - 6);  // " ====="
        std::size_t colon = inner.find(": ");
        part.paper_id = inner.substr(0, colon);
        part.title = colon == std::string::npos ? "" : inner.substr(colon + 2);
    };

    // Walk lines by byte offset; text segments keep their bytes untouched apart
    // from the single newline the builder appended.
    std::size_t pos = 0;
    std::optional<CombinedPart> current;
    std::size_t text_begin = 0;
    auto flush = [&](std::size_t segment_end) {
        if (!current) return;
        std::string segment = document.substr(text_begin, segment_end - text_begin);
        if (ends_with(segment, "\n")) segment.pop_back();
        current->text = std::move(segment);
        parts.push_back(std::move(*current));
        current.reset();
    };

    while (pos <= document.size()) {
        std::size_t nl = document.find('\n', pos);
        std::size_t line_end = nl == std::string::npos ? document.size() : nl;
        std::string line = document.substr(pos, line_end - pos);
        if (looks_like_delimiter(line, token)) {
            flush(pos);
            CombinedPart part;
            parse_header(line, part);
            current = std::move(part);
            text_begin = nl == std::string::npos ? document.size() : nl + 1;
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    flush(document.size());
    return parts;
}

} // namespace ceker
