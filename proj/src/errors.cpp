#include "ceker/errors.hpp"

namespace ceker {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::AlreadyInitialized: return "AlreadyInitialized";
        case ErrorCode::NotAProject: return "NotAProject";
        case ErrorCode::NotWritable: return "NotWritable";
        case ErrorCode::CorruptRunLog: return "CorruptRunLog";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::MissingCredential: return "MissingCredential";
        case ErrorCode::MissingTranscript: return "MissingTranscript";
        case ErrorCode::ReplayMiss: return "ReplayMiss";
        case ErrorCode::HttpError: return "HttpError";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::NoMockRule: return "NoMockRule";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::ResolverUnavailable: return "ResolverUnavailable";
        case ErrorCode::InvalidCandidate: return "InvalidCandidate";
        case ErrorCode::UnreadableFile: return "UnreadableFile";
        case ErrorCode::InvalidEncoding: return "InvalidEncoding";
        case ErrorCode::EmptyProposal: return "EmptyProposal";
        case ErrorCode::MissingDecision: return "MissingDecision";
        case ErrorCode::MissingPaperText: return "MissingPaperText";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::EmptyPromptSet: return "EmptyPromptSet";
        case ErrorCode::IncompleteRun: return "IncompleteRun";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NoScores: return "NoScores";
        case ErrorCode::UnboundPlaceholder: return "UnboundPlaceholder";
        case ErrorCode::UnknownPlaceholder: return "UnknownPlaceholder";
        case ErrorCode::UnknownPromptId: return "UnknownPromptId";
        case ErrorCode::MissingAggregate: return "MissingAggregate";
        case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
        case ErrorCode::IncompleteAnalysis: return "IncompleteAnalysis";
        case ErrorCode::UsageError: return "UsageError";
        case ErrorCode::Aborted: return "Aborted";
    }
    return "Unknown";
}

} // namespace ceker
