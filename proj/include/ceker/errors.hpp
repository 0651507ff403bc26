#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ceker {

// Every failure the pipeline can surface carries one of these codes. The CLI
// prints them as `ERROR <code>: <message>` and maps them to exit code 1.
enum class ErrorCode {
    // project store
    AlreadyInitialized,
    NotAProject,
    NotWritable,
    CorruptRunLog,
    IoError,
    InvalidConfig,
    // gateway
    MissingCredential,
    MissingTranscript,
    ReplayMiss,
    HttpError,
    Timeout,
    NoMockRule,
    TooLarge,
    // bibliography
    ResolverUnavailable,
    InvalidCandidate,
    // corpus
    UnreadableFile,
    InvalidEncoding,
    EmptyProposal,
    MissingDecision,
    MissingPaperText,
    // extraction
    EmptyCorpus,
    EmptyPromptSet,
    IncompleteRun,
    OutOfRange,
    NoScores,
    // prompts
    UnboundPlaceholder,
    UnknownPlaceholder,
    UnknownPromptId,
    // analysis
    MissingAggregate,
    EmptyVocabulary,
    // reporting
    IncompleteAnalysis,
    // cli
    UsageError,
    Aborted,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }
    const char* code_name() const { return error_code_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

// Non-fatal findings (duplicate titles collapsed, short batches, lint hits...)
// collected alongside results instead of aborting them.
struct Warning {
    std::string code;
    std::string message;
};

using Warnings = std::vector<Warning>;

} // namespace ceker
