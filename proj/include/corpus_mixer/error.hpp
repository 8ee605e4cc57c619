#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corpus_mixer {

enum class ErrorCode {
    unknown_label,
    duplicate_doc_id,
    invalid_category,
    malformed_record,
    empty_corpus,
    missing_annotation,
    degenerate_marginals,
    invalid_mixture,
    invalid_temperature,
    taxonomy_mismatch,
    invalid_alpha,
    invalid_config,
    cap_infeasible,
    insufficient_data,
    target_missing,
    length_mismatch,
    no_feasible_candidate,
    arity_too_large,
    missing_score,
    insufficient_corpus,
    empty_selection,
    too_few_points,
    dimension_mismatch,
    invalid_spec,
    io_error,
};

std::string_view to_string(ErrorCode code);

// Every data-level failure in the library is reported through this type; the
// CLI maps it to exit code 1.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace corpus_mixer
