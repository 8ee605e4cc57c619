#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpus_mixer/json_io.hpp"

namespace corpus_mixer {

enum class TaxonomyKind { topic, format, cluster, product, global };

std::string_view to_string(TaxonomyKind kind);

class Taxonomy;
using TaxonomyPtr = std::shared_ptr<const Taxonomy>;

// An ordered, immutable set of category names. Ids are positions 0..arity-1.
class Taxonomy {
public:
    Taxonomy(TaxonomyKind kind, std::vector<std::string> names);
    // Product taxonomy over (rows x cols); cell id = row * cols.arity() + col.
    Taxonomy(TaxonomyPtr rows, TaxonomyPtr cols);

    TaxonomyKind kind() const noexcept { return kind_; }
    std::size_t arity() const noexcept { return names_.size(); }
    const std::string& name(std::size_t id) const { return names_.at(id); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    // "topic", "format", "product", "cluster:<k>" or "global".
    std::string spec() const;

    // Factor taxonomies of a product; null otherwise.
    const TaxonomyPtr& rows() const noexcept { return rows_; }
    const TaxonomyPtr& cols() const noexcept { return cols_; }

    // Exact-or-normalized lookup without throwing.
    std::optional<std::size_t> find(std::string_view label) const;

    // [{"id": 0, "name": ...}, ...]
    json to_json() const;

    bool operator==(const Taxonomy& other) const noexcept {
        return kind_ == other.kind_ && names_ == other.names_;
    }

private:
    TaxonomyKind kind_;
    std::vector<std::string> names_;
    std::vector<std::string> normalized_;
    TaxonomyPtr rows_;
    TaxonomyPtr cols_;
};

// The 24 topic categories, ids in lexicographic name order.
TaxonomyPtr canonical_topics();
// The 24 format categories, ids in lexicographic name order.
TaxonomyPtr canonical_formats();
// topic x format (576 cells) over the canonical registries.
TaxonomyPtr canonical_product();
TaxonomyPtr product_taxonomy(TaxonomyPtr rows, TaxonomyPtr cols);
// "cluster-00" .. "cluster-{k-1}".
TaxonomyPtr cluster_taxonomy(std::size_t k);
// A single category holding every document; selecting over it is plain
// corpus-wide selection.
TaxonomyPtr global_taxonomy();

// Parses the --taxonomy argument syntax.
TaxonomyPtr parse_taxonomy_spec(std::string_view spec);

// Rebuilds a taxonomy from its registry export; the spec string decides the
// kind. Throws InvalidSpec if names disagree with a canonical registry.
TaxonomyPtr taxonomy_from_json(std::string_view spec, const json& registry);

// Case-insensitive, whitespace-collapsing lookup that also accepts the short
// forms used in published mixture tables. Throws UnknownLabel.
std::size_t resolve_label(std::string_view label, const Taxonomy& tax);

// Lowercase + collapsed whitespace; exposed for tests.
std::string normalize_label(std::string_view label);

constexpr std::size_t product_cell(std::size_t row, std::size_t col, std::size_t col_arity) {
    return row * col_arity + col;
}

struct CellIndex {
    std::size_t row;
    std::size_t col;
};

constexpr CellIndex split_product_cell(std::size_t cell, std::size_t col_arity) {
    return {cell / col_arity, cell % col_arity};
}

}  // namespace corpus_mixer
