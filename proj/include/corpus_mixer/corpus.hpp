#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "corpus_mixer/json_io.hpp"
#include "corpus_mixer/taxonomy.hpp"

namespace corpus_mixer {

struct DocumentRecord {
    std::string id;
    std::uint64_t tokens = 0;
    std::size_t topic = 0;
    std::size_t format = 0;
    std::optional<std::size_t> cluster;
    std::map<std::string, double> scores;

    bool operator==(const DocumentRecord&) const = default;
};

struct CategoryCount {
    std::uint64_t documents = 0;
    std::uint64_t tokens = 0;

    CategoryCount& operator+=(const CategoryCount& o) {
        documents += o.documents;
        tokens += o.tokens;
        return *this;
    }
    bool operator==(const CategoryCount&) const = default;
};

enum class Weighting { tokens, documents };

Weighting parse_weighting(std::string_view name);
std::string_view to_string(Weighting weighting);

inline double weight_of(const CategoryCount& c, Weighting w) {
    return static_cast<double>(w == Weighting::tokens ? c.tokens : c.documents);
}

// Row-major count table over two category sets.
struct CountTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<CategoryCount> cells;

    CategoryCount& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
    const CategoryCount& at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
    bool operator==(const CountTable&) const = default;
};

// Aggregated per-domain counts plus (unless stats-only) the documents
// themselves, sorted by id. Built by CorpusBuilder; immutable afterwards.
// Merging is associative and commutative: any sharding of a record stream
// yields an identical index.
class CorpusIndex {
public:
    CorpusIndex(TaxonomyPtr topics, TaxonomyPtr formats, bool stats_only);

    static CorpusIndex merge(const CorpusIndex& a, const CorpusIndex& b);

    const TaxonomyPtr& topics() const noexcept { return topics_; }
    const TaxonomyPtr& formats() const noexcept { return formats_; }
    bool stats_only() const noexcept { return stats_only_; }

    std::uint64_t document_count() const noexcept { return total_.documents; }
    std::uint64_t token_count() const noexcept { return total_.tokens; }
    bool empty() const noexcept { return total_.documents == 0; }

    // Clusters are annotated on every document (and at least one exists).
    bool fully_clustered() const noexcept;
    // Number of cluster ids seen (max id + 1), 0 when none.
    std::size_t cluster_arity() const noexcept { return cluster_counts_.size(); }

    // Per-category counts for topic, format, cluster, product or global
    // taxonomies. Throws TaxonomyMismatch / MissingAnnotation.
    std::vector<CategoryCount> category_counts(const Taxonomy& tax) const;

    // Joint counts between two taxonomies; rows index `a`.
    CountTable joint_counts(const Taxonomy& a, const Taxonomy& b) const;

    // Domain of a document under a taxonomy. Throws MissingAnnotation for an
    // unclustered document under a cluster taxonomy.
    std::size_t category_of(const DocumentRecord& doc, const Taxonomy& tax) const;

    // Empty in stats-only mode.
    const std::vector<DocumentRecord>& documents() const noexcept { return docs_; }
    const DocumentRecord* find(std::string_view id) const;

    bool operator==(const CorpusIndex& other) const;

private:
    friend class CorpusBuilder;

    void require_documents(std::string_view what) const;
    void add_counts(const DocumentRecord& doc);
    void grow_clusters(std::size_t arity);
    void check_taxonomy(const Taxonomy& tax) const;
    static void require_same(const Taxonomy& a, const Taxonomy& b);

    TaxonomyPtr topics_;
    TaxonomyPtr formats_;
    bool stats_only_;

    CategoryCount total_;
    std::vector<CategoryCount> topic_counts_;
    std::vector<CategoryCount> format_counts_;
    std::vector<CategoryCount> cluster_counts_;
    std::uint64_t unclustered_documents_ = 0;
    CountTable topic_format_;
    // [cluster][topic] and [cluster][format]; rows grow with cluster ids.
    std::vector<std::vector<CategoryCount>> cluster_topic_;
    std::vector<std::vector<CategoryCount>> cluster_format_;

    std::vector<DocumentRecord> docs_;  // sorted by id
    std::vector<std::string> ids_;      // sorted; only in stats-only mode
};

class CorpusBuilder {
public:
    CorpusBuilder(TaxonomyPtr topics, TaxonomyPtr formats, bool stats_only = false);

    // Throws DuplicateDocId or InvalidCategory.
    void add(DocumentRecord doc);
    CorpusIndex build() &&;

private:
    CorpusIndex index_;
    std::unordered_set<std::string> seen_;
};

CorpusIndex ingest(const std::vector<DocumentRecord>& records, TaxonomyPtr topics,
                   TaxonomyPtr formats, bool stats_only = false);

// Parses one JSONL record. String labels go through resolve_label.
DocumentRecord parse_record(std::string_view line, const Taxonomy& topics, const Taxonomy& formats);
json record_to_json(const DocumentRecord& doc, const Taxonomy& topics, const Taxonomy& formats);

struct IngestOptions {
    bool stats_only = false;
    bool skip_malformed = false;
};

struct IngestResult {
    CorpusIndex index;
    std::size_t malformed_lines = 0;
};

// Reads JSONL from a stream; `source` labels error messages.
IngestResult read_corpus(std::istream& in, std::string_view source, TaxonomyPtr topics,
                         TaxonomyPtr formats, const IngestOptions& options = {});

// Reads each file as one shard (in parallel) and merges in path order.
IngestResult read_corpus_files(const std::vector<std::filesystem::path>& paths, TaxonomyPtr topics,
                               TaxonomyPtr formats, const IngestOptions& options = {});

}  // namespace corpus_mixer
