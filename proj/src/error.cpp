#include "corpus_mixer/error.hpp"

namespace corpus_mixer {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::unknown_label: return "UnknownLabel";
        case ErrorCode::duplicate_doc_id: return "DuplicateDocId";
        case ErrorCode::invalid_category: return "InvalidCategory";
        case ErrorCode::malformed_record: return "MalformedRecord";
        case ErrorCode::empty_corpus: return "EmptyCorpus";
        case ErrorCode::missing_annotation: return "MissingAnnotation";
        case ErrorCode::degenerate_marginals: return "DegenerateMarginals";
        case ErrorCode::invalid_mixture: return "InvalidMixture";
        case ErrorCode::invalid_temperature: return "InvalidTemperature";
        case ErrorCode::taxonomy_mismatch: return "TaxonomyMismatch";
        case ErrorCode::invalid_alpha: return "InvalidAlpha";
        case ErrorCode::invalid_config: return "InvalidConfig";
        case ErrorCode::cap_infeasible: return "CapInfeasible";
        case ErrorCode::insufficient_data: return "InsufficientData";
        case ErrorCode::target_missing: return "TargetMissing";
        case ErrorCode::length_mismatch: return "LengthMismatch";
        case ErrorCode::no_feasible_candidate: return "NoFeasibleCandidate";
        case ErrorCode::arity_too_large: return "ArityTooLarge";
        case ErrorCode::missing_score: return "MissingScore";
        case ErrorCode::insufficient_corpus: return "InsufficientCorpus";
        case ErrorCode::empty_selection: return "EmptySelection";
        case ErrorCode::too_few_points: return "TooFewPoints";
        case ErrorCode::dimension_mismatch: return "DimensionMismatch";
        case ErrorCode::invalid_spec: return "InvalidSpec";
        case ErrorCode::io_error: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace corpus_mixer
