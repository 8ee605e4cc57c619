#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpus_mixer/corpus.hpp"
#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/mixture.hpp"

namespace corpus_mixer {

// Largest-remainder apportionment of total_budget by mix; sums exactly to
// total_budget. Equal remainders go to the lower id.
std::vector<std::uint64_t> token_budgets(const Mixture& mix, std::uint64_t total_budget);

enum class SelectionMode { random, quality };
std::string_view to_string(SelectionMode mode);

struct SelectedDocument {
    std::string id;
    std::uint64_t tokens;
};

struct DomainSelection {
    std::uint64_t target_tokens = 0;
    std::uint64_t realized_tokens = 0;
    std::uint64_t available_tokens = 0;
    std::uint64_t max_document_tokens = 0;  // largest document in the domain
    bool exhausted = false;                 // ran out before reaching the target
    std::vector<SelectedDocument> documents;
};

struct SelectionManifest {
    TaxonomyPtr taxonomy;
    SelectionMode mode = SelectionMode::random;
    std::uint64_t seed = 0;
    std::string score_name;
    std::vector<DomainSelection> domains;  // by category id

    std::uint64_t total_target() const;
    std::uint64_t total_realized() const;
};

// Documents grouped by domain, each group in doc-id order. Needs a full index.
std::vector<std::vector<const DocumentRecord*>> domain_members(const CorpusIndex& index, const Taxonomy& tax);

// Per domain: seeded uniform shuffle, take documents until the realized
// tokens reach the target; a domain that runs out is flagged exhausted.
SelectionManifest select_random(const CorpusIndex& index, TaxonomyPtr tax, std::span<const std::uint64_t> budgets,
                                std::uint64_t seed);

// Per domain: highest score first (ties by doc id), until the target is
// reached. Throws MissingScore.
SelectionManifest select_by_quality(const CorpusIndex& index, TaxonomyPtr tax, std::span<const std::uint64_t> budgets,
                                    const std::string& score_name);

struct Redistribution {
    Mixture mixture;
    std::vector<bool> clamped;
    std::size_t rounds = 0;
};

// Water-filling: cells whose target tokens exceed availability are pinned at
// their availability, and the deficit is spread over the remaining cells in
// proportion to their current weights (or to their availability once no
// weighted cell is left). Throws InsufficientCorpus.
Redistribution redistribute_overflow(const Mixture& target, std::span<const std::uint64_t> availability,
                                     std::uint64_t total_budget);

struct ManifestStats {
    std::optional<Mixture> realized;  // unset for an empty manifest
    std::vector<std::uint64_t> shortfall;
    std::vector<std::uint64_t> overshoot;
    std::vector<std::size_t> exhausted;
};

ManifestStats manifest_stats(const SelectionManifest& manifest);

// Token-weighted composition of a selection (or of a whole corpus).
// Throws EmptySelection.
Mixture implicit_mixture(const CorpusIndex& index, TaxonomyPtr tax);
Mixture implicit_mixture(const SelectionManifest& manifest, const CorpusIndex& index, TaxonomyPtr tax);
Mixture implicit_mixture(std::span<const std::string> doc_ids, const CorpusIndex& index, TaxonomyPtr tax);

// {"id", "tokens", "domain"} per selected document, domains in id order.
std::string manifest_jsonl(const SelectionManifest& manifest);
json manifest_summary(const SelectionManifest& manifest);
std::vector<std::string> read_manifest_ids(const std::filesystem::path& path);

// Deterministically sets aside about `fraction` of documents (by hashed id),
// returning the remaining corpus and the held-out ids.
struct HoldoutSplit {
    CorpusIndex train;
    std::vector<std::string> holdout_ids;
};
HoldoutSplit split_holdout(const CorpusIndex& index, double fraction, std::uint64_t seed);

struct ComposedSelection {
    Mixture intended;
    Mixture feasible;
    std::vector<std::uint64_t> budgets;
    SelectionManifest manifest;
};

// Topic x format product mixture -> overflow redistribution -> per-cell
// budgets -> quality selection inside each cell.
ComposedSelection compose_quality_mixture(const CorpusIndex& index, const Mixture& topic_mix,
                                          const Mixture& format_mix, const std::string& score_name,
                                          std::uint64_t total_budget);

}  // namespace corpus_mixer
