#include "corpus_mixer/taxonomy.hpp"

#include "corpus_mixer/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>
#include <span>

namespace corpus_mixer {

namespace {

constexpr std::array<std::string_view, 24> kTopicNames = {
    "Adult",          "Art & Design",         "Crime & Law",        "Education & Jobs",
    "Entertainment",  "Fashion & Beauty",     "Finance & Business", "Food & Dining",
    "Games",          "Hardware",             "Health",             "History",
    "Home & Hobbies", "Industrial",           "Literature",         "Politics",
    "Religion",       "Science & Technology", "Social Life",        "Software",
    "Software Development", "Sports & Fitness", "Transportation",   "Travel",
};

constexpr std::array<std::string_view, 24> kFormatNames = {
    "About (Org.)",      "About (Personal)", "Academic Writing",   "Audio Transcript",
    "Comment Section",   "Content Listing",  "Creative Writing",   "Customer Support",
    "Documentation",     "FAQ",              "Knowledge Article",  "Legal Notices",
    "Listicle",          "News (Org.)",      "News Article",       "Nonfiction Writing",
    "Personal Blog",     "Product Page",     "Q&A Forum",          "Spam / Ads",
    "Structured Data",   "Truncated",        "Tutorial",           "User Review",
};

// Short forms that appear in published mixture tables, keyed by normalized
// spelling.
struct Abbreviation {
    std::string_view short_form;
    std::string_view full_name;
};
constexpr std::array<Abbreviation, 3> kAbbreviations = {{
    {"science & tech.", "Science & Technology"},
    {"software dev.", "Software Development"},
    {"about (pers.)", "About (Personal)"},
}};

std::vector<std::string> sorted_names(std::span<const std::string_view> names) {
    std::vector<std::string> out(names.begin(), names.end());
    std::sort(out.begin(), out.end());
    return out;
}

void check_unique(const std::vector<std::string>& names) {
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (n.empty()) throw Error(ErrorCode::invalid_spec, "empty category name");
        if (!seen.insert(normalize_label(n)).second) {
            throw Error(ErrorCode::invalid_spec, "duplicate category name '" + n + "'");
        }
    }
}

}  // namespace

std::string_view to_string(TaxonomyKind kind) {
    switch (kind) {
        case TaxonomyKind::topic: return "topic";
        case TaxonomyKind::format: return "format";
        case TaxonomyKind::cluster: return "cluster";
        case TaxonomyKind::product: return "product";
        case TaxonomyKind::global: return "global";
    }
    return "unknown";
}

std::string normalize_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    bool pending_space = false;
    for (char c : label) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

Taxonomy::Taxonomy(TaxonomyKind kind, std::vector<std::string> names)
    : kind_(kind), names_(std::move(names)) {
    if (names_.empty()) throw Error(ErrorCode::invalid_spec, "taxonomy needs at least one category");
    if (kind_ == TaxonomyKind::product) {
        throw Error(ErrorCode::invalid_spec, "product taxonomies are built from their factors");
    }
    check_unique(names_);
    for (const auto& n : names_) normalized_.push_back(normalize_label(n));
}

Taxonomy::Taxonomy(TaxonomyPtr rows, TaxonomyPtr cols)
    : kind_(TaxonomyKind::product), rows_(std::move(rows)), cols_(std::move(cols)) {
    names_.reserve(rows_->arity() * cols_->arity());
    for (const auto& r : rows_->names()) {
        for (const auto& c : cols_->names()) names_.push_back(r + " | " + c);
    }
}

std::string Taxonomy::spec() const {
    if (kind_ == TaxonomyKind::cluster) return "cluster:" + std::to_string(arity());
    return std::string(to_string(kind_));
}

std::optional<std::size_t> Taxonomy::find(std::string_view label) const {
    if (kind_ == TaxonomyKind::product) {
        const auto bar = label.find('|');
        if (bar == std::string_view::npos) return std::nullopt;
        const auto row = rows_->find(label.substr(0, bar));
        const auto col = cols_->find(label.substr(bar + 1));
        if (!row || !col) return std::nullopt;
        return product_cell(*row, *col, cols_->arity());
    }
    std::string key = normalize_label(label);
    for (const auto& abbr : kAbbreviations) {
        if (key == abbr.short_form) {
            key = normalize_label(abbr.full_name);
            break;
        }
    }
    const auto it = std::find(normalized_.begin(), normalized_.end(), key);
    if (it == normalized_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - normalized_.begin());
}

json Taxonomy::to_json() const {
    json arr = json::array();
    for (std::size_t i = 0; i < names_.size(); ++i) arr.push_back({{"id", i}, {"name", names_[i]}});
    return arr;
}

TaxonomyPtr canonical_topics() {
    static const TaxonomyPtr tax =
        std::make_shared<const Taxonomy>(TaxonomyKind::topic, sorted_names(kTopicNames));
    return tax;
}

TaxonomyPtr canonical_formats() {
    static const TaxonomyPtr tax =
        std::make_shared<const Taxonomy>(TaxonomyKind::format, sorted_names(kFormatNames));
    return tax;
}

TaxonomyPtr canonical_product() {
    static const TaxonomyPtr tax = product_taxonomy(canonical_topics(), canonical_formats());
    return tax;
}

TaxonomyPtr product_taxonomy(TaxonomyPtr rows, TaxonomyPtr cols) {
    if (!rows || !cols) throw Error(ErrorCode::invalid_spec, "null product factor");
    return std::make_shared<const Taxonomy>(std::move(rows), std::move(cols));
}

TaxonomyPtr cluster_taxonomy(std::size_t k) {
    if (k == 0) throw Error(ErrorCode::invalid_spec, "cluster taxonomy needs k >= 1");
    const std::size_t width = std::max<std::size_t>(2, std::to_string(k - 1).size());
    std::vector<std::string> names;
    names.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::string digits = std::to_string(i);
        names.push_back("cluster-" + std::string(width - digits.size(), '0') + digits);
    }
    return std::make_shared<const Taxonomy>(TaxonomyKind::cluster, std::move(names));
}

TaxonomyPtr global_taxonomy() {
    static const TaxonomyPtr tax =
        std::make_shared<const Taxonomy>(TaxonomyKind::global, std::vector<std::string>{"all"});
    return tax;
}

TaxonomyPtr parse_taxonomy_spec(std::string_view spec) {
    if (spec == "topic") return canonical_topics();
    if (spec == "format") return canonical_formats();
    if (spec == "product") return canonical_product();
    if (spec == "global") return global_taxonomy();
    if (spec.starts_with("cluster:")) {
        const auto digits = spec.substr(8);
        std::size_t k = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && k > 0) return cluster_taxonomy(k);
    }
    throw Error(ErrorCode::invalid_spec,
                "taxonomy must be topic|format|product|global|cluster:<k>, got '" + std::string(spec) + "'");
}

TaxonomyPtr taxonomy_from_json(std::string_view spec, const json& registry) {
    auto tax = parse_taxonomy_spec(spec);
    if (!registry.is_array() || registry.size() != tax->arity()) {
        throw Error(ErrorCode::invalid_spec, "registry size does not match " + std::string(spec));
    }
    for (const auto& entry : registry) {
        const auto id = entry.at("id").get<std::size_t>();
        if (id >= tax->arity() || entry.at("name").get<std::string>() != tax->name(id)) {
            throw Error(ErrorCode::invalid_spec, "registry entry does not match " + std::string(spec));
        }
    }
    return tax;
}

std::size_t resolve_label(std::string_view label, const Taxonomy& tax) {
    if (auto id = tax.find(label)) return *id;
    throw Error(ErrorCode::unknown_label,
                "'" + std::string(label) + "' is not a " + std::string(to_string(tax.kind())) + " category");
}

}  // namespace corpus_mixer
